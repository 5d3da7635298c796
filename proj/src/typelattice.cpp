#include "dyn/typelattice.hpp"

#include <algorithm>
#include <cctype>

namespace dyn {

namespace {
const std::string kNull = "Null";
}

Universe::Universe(std::vector<std::string> classes) {
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    classes.erase(std::remove(classes.begin(), classes.end(), kNull), classes.end());
    if (static_cast<int>(classes.size()) > kMaxClasses)
        throw std::length_error("too many classes for the type lattice");
    names_ = std::move(classes);
    top_ = (names_.size() == 63) ? ~uint64_t{0} : ((uint64_t{1} << (names_.size() + 1)) - 1);
}

int Universe::bit_of(const std::string& name) const {
    if (name == kNull) return 0;
    auto it = std::lower_bound(names_.begin(), names_.end(), name);
    if (it == names_.end() || *it != name) return -1;
    return static_cast<int>(it - names_.begin()) + 1;
}

const std::string& Universe::name_of_bit(int bit) const {
    return bit == 0 ? kNull : names_.at(bit - 1);
}

UniverseRef make_universe(std::vector<std::string> classes) {
    return std::make_shared<const Universe>(std::move(classes));
}

UnionType::UnionType(UniverseRef u, uint64_t bits) : u_(std::move(u)), bits_(bits) {
    if (u_) bits_ &= u_->top_bits();
}

UnionType UnionType::of(const UniverseRef& u, const std::vector<std::string>& names) {
    uint64_t b = 0;
    for (auto& n : names) {
        int i = u->bit_of(n);
        if (i < 0) throw std::invalid_argument("unknown class '" + n + "'");
        b |= uint64_t{1} << i;
    }
    return UnionType(u, b);
}

bool UnionType::same_universe(const UnionType& o) const {
    if (u_ == o.u_) return true;
    if (!u_ || !o.u_) return false;
    return u_->same_as(*o.u_);
}

bool UnionType::contains(const std::string& cls) const {
    int i = u_->bit_of(cls);
    return i >= 0 && (bits_ >> i & 1u);
}

std::vector<std::string> UnionType::class_names() const {
    std::vector<std::string> out;
    if (!u_) return out;
    for (int i = 0; i <= u_->size(); ++i)
        if (bits_ >> i & 1u) out.push_back(u_->name_of_bit(i));
    return out;
}

std::string UnionType::str() const {
    std::string s = "{";
    bool first = true;
    for (auto& n : class_names()) {
        if (!first) s += ",";
        s += n;
        first = false;
    }
    return s + "}";
}

static void check_same(const UnionType& a, const UnionType& b) {
    if (!a.same_universe(b)) throw UniverseMismatch();
}

bool leq(const UnionType& a, const UnionType& b) {
    check_same(a, b);
    return (a.bits() & ~b.bits()) == 0;
}

UnionType meet(const UnionType& a, const UnionType& b) {
    check_same(a, b);
    return UnionType(a.universe(), a.bits() & b.bits());
}

UnionType join(const UnionType& a, const UnionType& b) {
    check_same(a, b);
    return UnionType(a.universe(), a.bits() | b.bits());
}

UnionType complement(const UnionType& a) {
    return UnionType(a.universe(), a.universe()->top_bits() & ~a.bits());
}

UnionType strip_null(const UnionType& a) { return UnionType(a.universe(), a.bits() & ~uint64_t{1}); }

UnionType parse_type(const UniverseRef& u, const std::string& text) {
    std::string t;
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) t += c;
    if (t == "TOP") return UnionType::top(u);
    if (t.size() < 2 || t.front() != '{' || t.back() != '}')
        throw std::invalid_argument("malformed type '" + text + "'");
    std::vector<std::string> names;
    std::string cur;
    for (size_t i = 1; i + 1 < t.size(); ++i) {
        if (t[i] == ',') {
            names.push_back(cur);
            cur.clear();
        } else {
            cur += t[i];
        }
    }
    if (!cur.empty()) names.push_back(cur);
    for (auto& n : names)
        if (n.empty()) throw std::invalid_argument("malformed type '" + text + "'");
    return UnionType::of(u, names);
}

}  // namespace dyn
