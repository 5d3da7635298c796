#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dyn {

// Bit 0 is the synthetic Null class; declared classes follow in name order.
class Universe {
public:
    static constexpr int kMaxClasses = 63;

    explicit Universe(std::vector<std::string> classes);

    int size() const { return static_cast<int>(names_.size()); }
    const std::vector<std::string>& classes() const { return names_; }
    // -1 when absent; "Null" maps to bit 0
    int bit_of(const std::string& name) const;
    const std::string& name_of_bit(int bit) const;
    uint64_t top_bits() const { return top_; }
    bool same_as(const Universe& o) const { return names_ == o.names_; }

private:
    std::vector<std::string> names_;
    uint64_t top_ = 0;
};

using UniverseRef = std::shared_ptr<const Universe>;

UniverseRef make_universe(std::vector<std::string> classes);

struct UniverseMismatch : std::logic_error {
    UniverseMismatch() : std::logic_error("union types over different universes") {}
};

class UnionType {
public:
    UnionType() = default;
    UnionType(UniverseRef u, uint64_t bits);

    static UnionType bottom(const UniverseRef& u) { return UnionType(u, 0); }
    static UnionType top(const UniverseRef& u) { return UnionType(u, u->top_bits()); }
    static UnionType null_only(const UniverseRef& u) { return UnionType(u, 1); }
    static UnionType of(const UniverseRef& u, const std::vector<std::string>& names);

    const UniverseRef& universe() const { return u_; }
    uint64_t bits() const { return bits_; }
    bool valid() const { return static_cast<bool>(u_); }

    bool is_bottom() const { return bits_ == 0; }
    bool is_top() const { return u_ && bits_ == u_->top_bits(); }
    bool has_null() const { return bits_ & 1u; }
    bool contains(const std::string& cls) const;
    std::vector<std::string> class_names() const;  // canonical order, Null first

    bool operator==(const UnionType& o) const { return bits_ == o.bits_ && same_universe(o); }
    bool operator!=(const UnionType& o) const { return !(*this == o); }
    bool operator<(const UnionType& o) const { return bits_ < o.bits_; }

    bool same_universe(const UnionType& o) const;

    std::string str() const;

private:
    UniverseRef u_;
    uint64_t bits_ = 0;
};

bool leq(const UnionType& a, const UnionType& b);
UnionType meet(const UnionType& a, const UnionType& b);
UnionType join(const UnionType& a, const UnionType& b);
UnionType complement(const UnionType& a);
UnionType strip_null(const UnionType& a);

// Accepts "{a,b}", "{}" and "TOP"; throws std::invalid_argument on unknown names.
UnionType parse_type(const UniverseRef& u, const std::string& text);

}  // namespace dyn
