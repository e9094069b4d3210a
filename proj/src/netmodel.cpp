#include "msldp/netmodel.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "msldp/error.hpp"

namespace msldp {

std::vector<int> Reaction::net_change(std::size_t n_species) const {
    std::vector<int> z(n_species, 0);
    for (auto [i, c] : outputs) z[static_cast<std::size_t>(i)] += c;
    for (auto [i, c] : inputs) z[static_cast<std::size_t>(i)] -= c;
    return z;
}

int ReactionNetwork::species_index(const std::string& name) const {
    for (std::size_t i = 0; i < species.size(); ++i)
        if (species[i].name == name) return static_cast<int>(i);
    return -1;
}

std::vector<std::vector<int>> ReactionNetwork::stoichiometry() const {
    std::vector<std::vector<int>> s(species.size(), std::vector<int>(reactions.size(), 0));
    for (std::size_t k = 0; k < reactions.size(); ++k) {
        const auto z = reactions[k].net_change(species.size());
        for (std::size_t i = 0; i < z.size(); ++i) s[i][k] = z[i];
    }
    return s;
}

double ReactionNetwork::rate(std::size_t k, std::span<const double> z) const {
    const Reaction& r = reactions[k];
    double v = expr::eval(r.rate.constant, z);
    for (auto [i, nu] : r.inputs) {
        const int excluded = static_cast<int>(std::count(r.rate_excluded.begin(), r.rate_excluded.end(), i));
        const int order = nu - excluded;
        if (order <= 0) continue;
        double a = z[static_cast<std::size_t>(i)];
        if (auto c = r.rate.caps.find(i); c != r.rate.caps.end()) a = std::min(a, c->second);
        if (species[static_cast<std::size_t>(i)].scale == Rational(0)) {
            for (int m = 0; m < order; ++m) v *= std::max(a - m, 0.0);
        } else {
            for (int m = 0; m < order; ++m) v *= a;
        }
    }
    return v;
}

std::string species_symbol(const ReactionNetwork& net, int index) {
    if (index >= 0 && static_cast<std::size_t>(index) < net.species.size())
        return net.species[static_cast<std::size_t>(index)].name;
    return "v" + std::to_string(index);
}

namespace {

std::string fmt(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

struct Pos {
    int line = 1;
    int col = 1;
};

[[noreturn]] void fail_at(const std::string& kind, Pos p, const std::string& msg) {
    throw Error(kind, "line " + std::to_string(p.line) + ", column " + std::to_string(p.col) + ": " + msg);
}

struct RawTerm {
    std::string name;
    int count = 1;
    bool excluded = false;
    Pos pos;
};

struct RawReaction {
    std::string name;
    std::vector<RawTerm> lhs, rhs;
    std::string k_text;
    Pos k_pos;
    Rational beta{1};
    bool has_beta = false;
    std::vector<std::pair<RawTerm, double>> caps;
    Pos pos;
};

struct RawLaw {
    std::vector<RawTerm> terms;
    double total = 0;
    Pos pos;
};

class Scanner {
public:
    explicit Scanner(const std::string& s) : s_(s) {}

    Pos pos() const { return pos_; }
    bool eof() {
        skip();
        return i_ >= s_.size();
    }
    char peek() {
        skip();
        return i_ < s_.size() ? s_[i_] : '\0';
    }
    bool accept(const std::string& tok) {
        skip();
        if (s_.compare(i_, tok.size(), tok) == 0) {
            advance(tok.size());
            return true;
        }
        return false;
    }
    void expect(const std::string& tok) {
        if (!accept(tok)) fail_at("SyntaxError", pos_, "expected '" + tok + "'");
    }
    std::string ident() {
        skip();
        const std::size_t start = i_;
        if (i_ < s_.size() && (std::isalpha(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) {
            while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_'))
                advance(1);
        }
        if (i_ == start) fail_at("SyntaxError", pos_, "expected identifier");
        return s_.substr(start, i_ - start);
    }
    bool at_int() {
        skip();
        return i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]));
    }
    int integer() {
        skip();
        int v = 0;
        auto [ptr, ec] = std::from_chars(s_.data() + i_, s_.data() + s_.size(), v);
        if (ec != std::errc()) fail_at("SyntaxError", pos_, "expected integer");
        advance(static_cast<std::size_t>(ptr - (s_.data() + i_)));
        return v;
    }
    double number() {
        skip();
        double v = 0;
        const char* b = s_.data() + i_;
        if (*b == '+') {
            advance(1);
            b = s_.data() + i_;
        }
        auto [ptr, ec] = std::from_chars(b, s_.data() + s_.size(), v);
        if (ec != std::errc()) fail_at("SyntaxError", pos_, "expected number");
        advance(static_cast<std::size_t>(ptr - b));
        return v;
    }
    Rational rational() {
        skip();
        const Pos p = pos_;
        bool neg = accept("-");
        const int n = integer();
        int d = 1;
        if (accept("/")) d = integer();
        if (d == 0) fail_at("SyntaxError", p, "zero denominator");
        return Rational(neg ? -n : n, d);
    }
    /// Raw text up to a top-level ',' or ')'.
    std::string expression_text(Pos& start) {
        skip();
        start = pos_;
        const std::size_t b = i_;
        int depth = 0;
        while (i_ < s_.size()) {
            const char c = s_[i_];
            if (c == '(') ++depth;
            if (c == ')') {
                if (depth == 0) break;
                --depth;
            }
            if (c == ',' && depth == 0) break;
            if (c == '\n') fail_at("SyntaxError", pos_, "unterminated rate expression");
            advance(1);
        }
        std::string t = s_.substr(b, i_ - b);
        while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back()))) t.pop_back();
        if (t.empty()) fail_at("SyntaxError", start, "empty rate expression");
        return t;
    }

private:
    void advance(std::size_t n) {
        for (std::size_t j = 0; j < n && i_ < s_.size(); ++j, ++i_) {
            if (s_[i_] == '\n') {
                ++pos_.line;
                pos_.col = 1;
            } else {
                ++pos_.col;
            }
        }
    }
    void skip() {
        while (i_ < s_.size()) {
            if (std::isspace(static_cast<unsigned char>(s_[i_]))) {
                advance(1);
            } else if (s_[i_] == '#') {
                while (i_ < s_.size() && s_[i_] != '\n') advance(1);
            } else {
                break;
            }
        }
    }

    const std::string& s_;
    std::size_t i_ = 0;
    Pos pos_;
};

std::vector<RawTerm> parse_side(Scanner& sc) {
    std::vector<RawTerm> terms;
    if (sc.peek() == '0') {
        const Pos p = sc.pos();
        if (sc.integer() != 0) fail_at("SyntaxError", p, "expected species or 0");
        return terms;
    }
    do {
        RawTerm t;
        t.pos = sc.pos();
        if (sc.accept("(")) {
            t.excluded = true;
            t.name = sc.ident();
            sc.expect(")");
        } else {
            if (sc.at_int()) t.count = sc.integer();
            if (t.count <= 0) fail_at("SyntaxError", t.pos, "stoichiometric coefficient must be positive");
            t.name = sc.ident();
        }
        terms.push_back(t);
    } while (sc.accept("+"));
    return terms;
}

}  // namespace

ReactionNetwork parse_network(const std::string& text) {
    Scanner sc(text);
    std::vector<std::pair<Species, Pos>> declared;
    std::vector<RawReaction> raw_reactions;
    std::vector<RawLaw> raw_laws;
    std::vector<std::pair<RawTerm, double>> raw_init;

    while (!sc.eof()) {
        const Pos p = sc.pos();
        const std::string kw = sc.ident();
        if (kw == "species") {
            Species s;
            s.name = sc.ident();
            bool has_scale = false;
            sc.expect("{");
            do {
                const Pos ap = sc.pos();
                const std::string attr = sc.ident();
                sc.expect("=");
                if (attr == "scale") {
                    s.scale = sc.rational();
                    has_scale = true;
                    if (s.scale < Rational(0)) fail_at("ScalingViolation", ap, "scale must be nonnegative");
                    if (s.scale.den() > 6) fail_at("ScalingViolation", ap, "scale denominator exceeds 6");
                } else if (attr == "kind") {
                    const std::string v = sc.ident();
                    if (v == "slow") s.kind = SpeciesKind::Slow;
                    else if (v == "fast") s.kind = SpeciesKind::Fast;
                    else fail_at("SyntaxError", ap, "kind must be slow or fast");
                } else {
                    fail_at("SyntaxError", ap, "unknown species attribute '" + attr + "'");
                }
            } while (sc.accept(","));
            sc.expect("}");
            if (!has_scale) fail_at("SyntaxError", p, "species '" + s.name + "' lacks scale");
            for (const auto& [d, dp] : declared)
                if (d.name == s.name) fail_at("DuplicateSpecies", p, "species '" + s.name + "' declared twice");
            declared.emplace_back(s, p);
        } else if (kw == "reaction") {
            RawReaction r;
            r.pos = p;
            r.name = sc.ident();
            sc.expect(":");
            r.lhs = parse_side(sc);
            sc.expect("->");
            r.rhs = parse_side(sc);
            for (const auto& t : r.rhs)
                if (t.excluded) fail_at("SyntaxError", t.pos, "rate-excluded term on product side");
            sc.expect("@");
            const Pos lp = sc.pos();
            if (sc.ident() != "ma") fail_at("SyntaxError", lp, "only ma(...) rate laws are supported");
            sc.expect("(");
            bool has_k = false;
            do {
                const Pos ap = sc.pos();
                const std::string attr = sc.ident();
                sc.expect("=");
                if (attr == "k") {
                    r.k_text = sc.expression_text(r.k_pos);
                    has_k = true;
                } else if (attr == "beta") {
                    r.beta = sc.rational();
                    r.has_beta = true;
                    if (r.beta.den() > 6) fail_at("ScalingViolation", ap, "beta denominator exceeds 6");
                } else if (attr == "cap") {
                    do {
                        RawTerm t;
                        t.pos = sc.pos();
                        t.name = sc.ident();
                        sc.expect(":");
                        const double level = sc.number();
                        if (!(level > 0)) fail_at("SyntaxError", t.pos, "cap level must be positive");
                        r.caps.emplace_back(t, level);
                    } while (sc.accept(";"));
                } else {
                    fail_at("SyntaxError", ap, "unknown rate attribute '" + attr + "'");
                }
            } while (sc.accept(","));
            sc.expect(")");
            if (!has_k) fail_at("SyntaxError", p, "reaction '" + r.name + "' lacks k=");
            if (!r.has_beta) fail_at("SyntaxError", p, "reaction '" + r.name + "' lacks beta=");
            for (const auto& o : raw_reactions)
                if (o.name == r.name) fail_at("SyntaxError", p, "reaction '" + r.name + "' defined twice");
            raw_reactions.push_back(std::move(r));
        } else if (kw == "conserve") {
            RawLaw law;
            law.pos = p;
            sc.expect(":");
            do {
                RawTerm t;
                t.pos = sc.pos();
                if (sc.at_int()) {
                    t.count = sc.integer();
                    sc.accept("*");
                }
                t.name = sc.ident();
                law.terms.push_back(t);
            } while (sc.accept("+"));
            sc.expect("=");
            law.total = sc.number();
            raw_laws.push_back(law);
        } else if (kw == "init") {
            sc.expect(":");
            do {
                RawTerm t;
                t.pos = sc.pos();
                t.name = sc.ident();
                sc.expect("=");
                raw_init.emplace_back(t, sc.number());
            } while (sc.accept(","));
        } else {
            fail_at("SyntaxError", p, "unknown statement '" + kw + "'");
        }
    }

    // Resolve species; those never used as inputs become passive.
    auto declared_index = [&](const RawTerm& t) {
        for (std::size_t i = 0; i < declared.size(); ++i)
            if (declared[i].first.name == t.name) return static_cast<int>(i);
        fail_at("UnknownSpecies", t.pos, "unknown species '" + t.name + "'");
    };
    std::vector<bool> is_input(declared.size(), false);
    for (const auto& r : raw_reactions)
        for (const auto& t : r.lhs) is_input[static_cast<std::size_t>(declared_index(t))] = true;
    for (const auto& r : raw_reactions)
        for (const auto& t : r.rhs) declared_index(t);

    ReactionNetwork net;
    std::vector<int> active_of(declared.size(), -1), passive_of(declared.size(), -1);
    for (std::size_t i = 0; i < declared.size(); ++i) {
        if (is_input[i]) {
            active_of[i] = static_cast<int>(net.species.size());
            net.species.push_back(declared[i].first);
        } else {
            passive_of[i] = static_cast<int>(net.passive.size());
            net.passive.push_back(declared[i].first);
        }
    }
    const std::size_t n = net.species.size();

    auto lookup_active = [&](const std::string& name) { return net.species_index(name); };

    for (const auto& rr : raw_reactions) {
        Reaction r;
        r.name = rr.name;
        for (const auto& t : rr.lhs) {
            const int a = active_of[static_cast<std::size_t>(declared_index(t))];
            r.inputs[a] += t.count;
            if (t.excluded) r.rate_excluded.push_back(a);
        }
        for (const auto& t : rr.rhs) {
            const auto d = static_cast<std::size_t>(declared_index(t));
            if (active_of[d] >= 0) r.outputs[active_of[d]] += t.count;
            else r.passive_outputs[passive_of[d]] += t.count;
        }
        std::sort(r.rate_excluded.begin(), r.rate_excluded.end());
        try {
            r.rate.constant = expr::parse(rr.k_text, lookup_active);
        } catch (const Error& e) {
            std::string msg = e.what();
            fail_at(e.kind(), rr.k_pos, "in rate of '" + rr.name + "': " + msg);
        }
        const expr::Degree deg = expr::degree(r.rate.constant, [](int) { return true; });
        if (!deg.rational)
            fail_at("NonRationalRate", rr.k_pos, "rate constant of '" + rr.name + "' must be a rational function");
        double kv = 0;
        if (expr::is_const(r.rate.constant, &kv) && !(kv > 0))
            fail_at("NonPositiveRate", rr.k_pos, "rate constant of '" + rr.name + "' must be positive");
        r.rate.rate_exponent = rr.beta;
        for (const auto& [t, level] : rr.caps) {
            const auto d = static_cast<std::size_t>(declared_index(t));
            if (active_of[d] < 0 || !r.inputs.count(active_of[d]))
                fail_at("SyntaxError", t.pos, "cap on '" + t.name + "' which is not an input");
            r.rate.caps[active_of[d]] = level;
        }
        const auto z = r.net_change(n);
        const bool zero = std::all_of(z.begin(), z.end(), [](int v) { return v == 0; }) && r.passive_outputs.empty();
        if (zero) fail_at("ZeroNetChange", rr.pos, "reaction '" + rr.name + "' has zero net change");
        net.reactions.push_back(std::move(r));
    }

    net.init.assign(n, std::nullopt);
    net.passive_init.assign(net.passive.size(), std::nullopt);
    for (const auto& [t, v] : raw_init) {
        const auto d = static_cast<std::size_t>(declared_index(t));
        if (v < 0) fail_at("SyntaxError", t.pos, "negative initial value");
        if (active_of[d] >= 0) net.init[static_cast<std::size_t>(active_of[d])] = v;
        else net.passive_init[static_cast<std::size_t>(passive_of[d])] = v;
    }

    net.conservation_laws = detect_conservation_laws(net);
    for (const auto& rl : raw_laws) {
        ConservationLaw law;
        law.weights.assign(n, 0);
        for (const auto& t : rl.terms) {
            const auto d = static_cast<std::size_t>(declared_index(t));
            if (active_of[d] < 0) fail_at("ConservationViolation", t.pos, "passive species in conservation law");
            law.weights[static_cast<std::size_t>(active_of[d])] += t.count;
        }
        for (std::size_t k = 0; k < net.reactions.size(); ++k) {
            const auto z = net.reactions[k].net_change(n);
            std::int64_t dot = 0;
            for (std::size_t i = 0; i < n; ++i) dot += law.weights[i] * z[i];
            if (dot != 0)
                fail_at("ConservationViolation", rl.pos,
                        "declared law is not conserved by reaction '" + net.reactions[k].name + "'");
        }
        auto same = std::find_if(net.conservation_laws.begin(), net.conservation_laws.end(),
                                 [&](const ConservationLaw& c) { return c.weights == law.weights; });
        if (same != net.conservation_laws.end()) {
            if (same->total && std::fabs(*same->total - rl.total) > 1e-12 * std::max(1.0, rl.total))
                fail_at("ConservationViolation", rl.pos, "declared total disagrees with init values");
            same->total = rl.total;
        } else {
            law.total = rl.total;
            law.pairwise = std::count_if(law.weights.begin(), law.weights.end(), [](auto w) { return w != 0; }) == 2;
            net.conservation_laws.push_back(law);
        }
    }
    return net;
}

std::vector<ConservationLaw> detect_conservation_laws(const ReactionNetwork& net) {
    const std::size_t n = net.species.size();
    using Vec = std::vector<std::int64_t>;
    // Double description on the cone {theta >= 0}, cut by each hyperplane theta.zeta_k = 0.
    std::vector<Vec> gens;
    for (std::size_t i = 0; i < n; ++i) {
        Vec e(n, 0);
        e[i] = 1;
        gens.push_back(e);
    }
    auto support = [](const Vec& v) {
        std::vector<std::size_t> s;
        for (std::size_t i = 0; i < v.size(); ++i)
            if (v[i] != 0) s.push_back(i);
        return s;
    };
    for (const auto& r : net.reactions) {
        const auto z = r.net_change(n);
        std::vector<Vec> pos, neg, keep;
        std::vector<std::int64_t> pos_d, neg_d;
        for (const auto& g : gens) {
            std::int64_t d = 0;
            for (std::size_t i = 0; i < n; ++i) d += g[i] * z[i];
            if (d == 0) keep.push_back(g);
            else if (d > 0) {
                pos.push_back(g);
                pos_d.push_back(d);
            } else {
                neg.push_back(g);
                neg_d.push_back(-d);
            }
        }
        for (std::size_t a = 0; a < pos.size(); ++a) {
            for (std::size_t b = 0; b < neg.size(); ++b) {
                Vec c(n);
                std::int64_t g = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    c[i] = neg_d[b] * pos[a][i] + pos_d[a] * neg[b][i];
                    g = std::gcd(g, c[i]);
                }
                if (g > 1)
                    for (auto& v : c) v /= g;
                keep.push_back(c);
            }
        }
        // Keep only minimal-support generators (extreme rays).
        std::vector<Vec> minimal;
        for (std::size_t a = 0; a < keep.size(); ++a) {
            const auto sa = support(keep[a]);
            bool redundant = false;
            for (std::size_t b = 0; b < keep.size() && !redundant; ++b) {
                if (a == b) continue;
                const auto sb = support(keep[b]);
                if (sb.size() < sa.size() && std::includes(sa.begin(), sa.end(), sb.begin(), sb.end()))
                    redundant = true;
                if (sb == sa && b < a) redundant = true;
            }
            if (!redundant) minimal.push_back(keep[a]);
        }
        gens = std::move(minimal);
    }
    std::sort(gens.begin(), gens.end(), [&](const Vec& a, const Vec& b) { return support(a) < support(b); });
    std::vector<ConservationLaw> laws;
    for (const auto& g : gens) {
        ConservationLaw law;
        law.weights = g;
        law.pairwise = support(g).size() == 2;
        bool have = true;
        double total = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (g[i] == 0) continue;
            if (!net.init.size() || !net.init[i]) {
                have = false;
                break;
            }
            total += static_cast<double>(g[i]) * *net.init[i];
        }
        if (have) law.total = total;
        laws.push_back(law);
    }
    return laws;
}

namespace {

/// Light classification used by validation: slow iff alpha > 0 and the
/// fastest reaction touching the species is no faster than its scale.
std::vector<bool> fast_mask(const ReactionNetwork& net) {
    const std::size_t n = net.species.size();
    std::vector<bool> fast(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        const Species& s = net.species[i];
        if (s.kind == SpeciesKind::Fast) {
            fast[i] = true;
            continue;
        }
        if (s.kind == SpeciesKind::Slow) continue;
        std::optional<Rational> beta;
        for (const auto& r : net.reactions) {
            if (r.net_change(n)[i] == 0) continue;
            if (!beta || r.rate.rate_exponent > *beta) beta = r.rate.rate_exponent;
        }
        fast[i] = s.scale == Rational(0) || (beta && *beta > s.scale);
    }
    return fast;
}

}  // namespace

ValidationReport validate_network(const ReactionNetwork& net) {
    ValidationReport rep;
    for (const auto& p : net.passive) rep.dropped_passive.push_back(p.name);
    const auto fast = fast_mask(net);
    const std::size_t n = net.species.size();
    for (const auto& r : net.reactions) {
        RateReport rr;
        rr.reaction = r.name;
        const expr::Degree kd = expr::degree(r.rate.constant, [](int) { return true; });
        rr.degree = kd.growth;
        for (auto [i, nu] : r.inputs) {
            const int excl = static_cast<int>(std::count(r.rate_excluded.begin(), r.rate_excluded.end(), i));
            const int order = nu - excl;
            if (order <= 0) continue;
            // A cap bounds the factor, so it contributes no growth.
            const bool capped = r.rate.caps.count(i) > 0;
            if (!capped) rr.degree += order;
            if (fast[static_cast<std::size_t>(i)]) rr.fast_degree += order;
        }
        const expr::Degree fk = expr::degree(r.rate.constant, [&](int v) {
            return v >= 0 && static_cast<std::size_t>(v) < n && fast[static_cast<std::size_t>(v)];
        });
        rr.fast_degree += std::max(fk.num, 0);
        if (rr.fast_degree > 1) {
            rep.linear_in_fast = false;
            rep.flags.push_back(r.name + ": bimolecular in fast species");
        }
        rep.rates.push_back(rr);
    }
    return rep;
}

std::string serialize_network(const ReactionNetwork& net) {
    std::ostringstream os;
    auto species_line = [&](const Species& s) {
        os << "species " << s.name << " {scale=" << s.scale.to_string();
        if (s.kind == SpeciesKind::Slow) os << ", kind=slow";
        if (s.kind == SpeciesKind::Fast) os << ", kind=fast";
        os << "}\n";
    };
    for (const auto& s : net.species) species_line(s);
    for (const auto& s : net.passive) species_line(s);
    auto name = [&](int i) { return species_symbol(net, i); };
    for (const auto& r : net.reactions) {
        os << "reaction " << r.name << ": ";
        std::vector<std::string> lhs, rhs;
        for (auto [i, nu] : r.inputs) {
            const int excl = static_cast<int>(std::count(r.rate_excluded.begin(), r.rate_excluded.end(), i));
            const int plain = nu - excl;
            if (plain > 0) lhs.push_back((plain > 1 ? std::to_string(plain) + " " : "") + name(i));
            for (int e = 0; e < excl; ++e) lhs.push_back("(" + name(i) + ")");
        }
        for (auto [i, nu] : r.outputs) rhs.push_back((nu > 1 ? std::to_string(nu) + " " : "") + name(i));
        for (auto [i, nu] : r.passive_outputs)
            rhs.push_back((nu > 1 ? std::to_string(nu) + " " : "") + net.passive[static_cast<std::size_t>(i)].name);
        auto join = [](const std::vector<std::string>& v) {
            if (v.empty()) return std::string("0");
            std::string s = v[0];
            for (std::size_t j = 1; j < v.size(); ++j) s += " + " + v[j];
            return s;
        };
        os << join(lhs) << " -> " << join(rhs) << " @ ma(k=" << expr::to_string(r.rate.constant, name)
           << ", beta=" << r.rate.rate_exponent.to_string();
        if (!r.rate.caps.empty()) {
            os << ", cap=";
            bool first = true;
            for (auto [i, level] : r.rate.caps) {
                os << (first ? "" : ";") << name(i) << ":" << fmt(level);
                first = false;
            }
        }
        os << ")\n";
    }
    for (const auto& law : net.conservation_laws) {
        if (!law.total) continue;
        os << "conserve: ";
        bool first = true;
        for (std::size_t i = 0; i < law.weights.size(); ++i) {
            if (law.weights[i] == 0) continue;
            os << (first ? "" : " + ");
            if (law.weights[i] != 1) os << law.weights[i] << "*";
            os << net.species[i].name;
            first = false;
        }
        os << " = " << fmt(*law.total) << "\n";
    }
    std::vector<std::string> inits;
    for (std::size_t i = 0; i < net.species.size(); ++i)
        if (net.init[i]) inits.push_back(net.species[i].name + "=" + fmt(*net.init[i]));
    for (std::size_t i = 0; i < net.passive.size(); ++i)
        if (net.passive_init[i]) inits.push_back(net.passive[i].name + "=" + fmt(*net.passive_init[i]));
    if (!inits.empty()) {
        os << "init: " << inits[0];
        for (std::size_t j = 1; j < inits.size(); ++j) os << ", " << inits[j];
        os << "\n";
    }
    return os.str();
}

bool same_structure(const ReactionNetwork& a, const ReactionNetwork& b) {
    auto same_species = [](const std::vector<Species>& x, const std::vector<Species>& y) {
        if (x.size() != y.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i].name != y[i].name || x[i].scale != y[i].scale || x[i].kind != y[i].kind) return false;
        return true;
    };
    if (!same_species(a.species, b.species) || !same_species(a.passive, b.passive)) return false;
    if (a.reactions.size() != b.reactions.size()) return false;
    auto na = [&](int i) { return species_symbol(a, i); };
    auto nb = [&](int i) { return species_symbol(b, i); };
    for (std::size_t k = 0; k < a.reactions.size(); ++k) {
        const Reaction& x = a.reactions[k];
        const Reaction& y = b.reactions[k];
        if (x.name != y.name || x.inputs != y.inputs || x.outputs != y.outputs ||
            x.rate_excluded != y.rate_excluded || x.passive_outputs != y.passive_outputs ||
            x.rate.rate_exponent != y.rate.rate_exponent || x.rate.caps != y.rate.caps)
            return false;
        if (expr::to_string(x.rate.constant, na) != expr::to_string(y.rate.constant, nb)) return false;
    }
    if (a.conservation_laws.size() != b.conservation_laws.size()) return false;
    for (std::size_t l = 0; l < a.conservation_laws.size(); ++l) {
        const auto& x = a.conservation_laws[l];
        const auto& y = b.conservation_laws[l];
        if (x.weights != y.weights || x.total != y.total || x.pairwise != y.pairwise) return false;
    }
    return a.init == b.init && a.passive_init == b.passive_init;
}

}  // namespace msldp
