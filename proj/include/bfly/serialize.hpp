#ifndef BFLY_SERIALIZE_HPP
#define BFLY_SERIALIZE_HPP

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "bfly/butterfly.hpp"
#include "bfly/transform.hpp"

namespace bfly {

// Plan container, all integers little-endian unsigned 64-bit and all reals
// little-endian IEEE 754 binary64:
//
//   "BFLY1"                                     magic
//   n_rows  n_cols  epsilon  block_width  levels
//   event_count
//   per event: kind(u8)  [leaf: col_begin col_count]
//              [merge: stripe_count left_ranks...]
//              id_count  per id: rank others indices... entries...
//              (`others` counts the non-identity interpolation columns;
//              inputs = rank + others)
//   group_count
//   per group: stripe_count
//              per stripe: row_begin row_count rank entries...
//
// Matrix entries are stored column-major.  A transform plan appends a
// section tagged "LTRN" carrying (m, parity, n) and the quadrature rule.
// Reads and writes are bit-exact inverses of each other.

class SerializationError : public std::runtime_error {
public:
    SerializationError(const std::string& what, std::uint64_t offset)
        : std::runtime_error(what + " at byte offset " + std::to_string(offset)),
          offset_(offset) {}
    std::uint64_t offset() const { return offset_; }

private:
    std::uint64_t offset_;
};

void save_plan(const ButterflyPlan& plan, std::ostream& os);
ButterflyPlan load_plan(std::istream& is);

void save_transform_plan(const transform::TransformPlan& tp, std::ostream& os);
transform::TransformPlan load_transform_plan(std::istream& is);

void save_transform_plan_file(const transform::TransformPlan& tp,
                              const std::string& path);
transform::TransformPlan load_transform_plan_file(const std::string& path);

// Quadrature rule cache files ("QDRL1"): same encoding conventions.
void save_rule_file(const quadrature::QuadratureRule& rule,
                    const std::string& path);
quadrature::QuadratureRule load_rule_file(const std::string& path);

} // namespace bfly

#endif
