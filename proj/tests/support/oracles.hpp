#pragma once

// Independent reimplementations used as test oracles. Nothing here calls the
// library code it checks; where the library has a fast path, the oracle takes
// the slowest obvious one.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gpv/backend.hpp"

namespace oracle {

// ---------------------------------------------------------------------------
// w rule, written out case by case.

struct WResult {
    bool measured = false;
    double value = 0.0;
};

inline WResult brute_w(double relevance, double support, double oppose, double either) {
    if (!(relevance > 0.5)) return {};
    const bool support_wins = support > oppose && support > either;
    const bool oppose_wins = oppose > support && oppose > either;
    if (!support_wins && !oppose_wins) return {};
    return {true, support - oppose};
}

// ---------------------------------------------------------------------------
// Statistics in long double over pairwise-complete observations.

using Column = std::vector<std::optional<double>>;

inline std::optional<double> pearson_ld(const Column& x, const Column& y) {
    long double sx = 0, sy = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] && y[i]) {
            sx += *x[i];
            sy += *y[i];
            ++n;
        }
    }
    if (n < 2) return std::nullopt;
    const long double mx = sx / n, my = sy / n;
    long double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] && y[i]) {
            const long double dx = *x[i] - mx, dy = *y[i] - my;
            sxy += dx * dy;
            sxx += dx * dx;
            syy += dy * dy;
        }
    }
    if (sxx == 0 || syy == 0) return std::nullopt;
    return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

inline std::optional<double> cosine_ld(const Column& x, const Column& y) {
    long double dot = 0, nx = 0, ny = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] && y[i]) {
            dot += static_cast<long double>(*x[i]) * *y[i];
            nx += static_cast<long double>(*x[i]) * *x[i];
            ny += static_cast<long double>(*y[i]) * *y[i];
        }
    }
    if (nx == 0 || ny == 0) return std::nullopt;
    return static_cast<double>(dot / std::sqrt(nx * ny));
}

// ---------------------------------------------------------------------------
// Eigenvalues of a symmetric matrix by shifted power iteration with Hotelling
// deflation. The shift makes the spectrum non-negative so the dominant
// eigenvalue found each round is the algebraically largest remaining one.

using Mat = std::vector<std::vector<long double>>;

inline std::vector<double> power_eigenvalues(const std::vector<std::vector<double>>& a, std::size_t k,
                                             int iterations = 20000) {
    const std::size_t n = a.size();
    Mat m(n, std::vector<long double>(n));
    long double gersh = 0;
    for (std::size_t i = 0; i < n; ++i) {
        long double row = 0;
        for (std::size_t j = 0; j < n; ++j) {
            m[i][j] = a[i][j];
            row += std::fabs(static_cast<long double>(a[i][j]));
        }
        gersh = std::max(gersh, row);
    }
    const long double shift = gersh;
    for (std::size_t i = 0; i < n; ++i) m[i][i] += shift;

    std::vector<double> out;
    for (std::size_t e = 0; e < k; ++e) {
        std::vector<long double> v(n);
        for (std::size_t i = 0; i < n; ++i) v[i] = 1.0L + 0.1L * static_cast<long double>(i) + 0.01L * e;
        long double lambda = 0;
        for (int it = 0; it < iterations; ++it) {
            std::vector<long double> w(n, 0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) w[i] += m[i][j] * v[j];
            long double norm = 0;
            for (auto x : w) norm += x * x;
            norm = std::sqrt(norm);
            if (norm == 0) break;
            for (auto& x : w) x /= norm;
            long double rq = 0;
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) rq += w[i] * m[i][j] * w[j];
            const bool settled = it > 50 && std::fabs(rq - lambda) <= 1e-22L * std::max<long double>(1, std::fabs(rq));
            lambda = rq;
            v = std::move(w);
            if (settled) break;
        }
        out.push_back(static_cast<double>(lambda - shift));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) m[i][j] -= lambda * v[i] * v[j];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Orthogonal Procrustes in 2D, closed form. Both configurations are centred;
// the best rotation and the best reflection are each found from the angle that
// maximises the trace, and the smaller residual is reported as an RMS.

using Points = std::vector<std::pair<double, double>>;

inline double procrustes_rms_2d(Points x, Points y) {
    const std::size_t n = x.size();
    auto centre = [n](Points& p) {
        double cx = 0, cy = 0;
        for (auto& [a, b] : p) {
            cx += a;
            cy += b;
        }
        cx /= n;
        cy /= n;
        for (auto& [a, b] : p) {
            a -= cx;
            b -= cy;
        }
    };
    centre(x);
    centre(y);
    auto residual = [&](const Points& yy) {
        double sdot = 0, scross = 0;
        for (std::size_t i = 0; i < n; ++i) {
            sdot += yy[i].first * x[i].first + yy[i].second * x[i].second;
            scross += yy[i].first * x[i].second - yy[i].second * x[i].first;
        }
        const double t = std::atan2(scross, sdot);
        const double c = std::cos(t), s = std::sin(t);
        double ss = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double rx = c * yy[i].first - s * yy[i].second;
            const double ry = s * yy[i].first + c * yy[i].second;
            ss += (rx - x[i].first) * (rx - x[i].first) + (ry - x[i].second) * (ry - x[i].second);
        }
        return std::sqrt(ss / n);
    };
    Points flipped = y;
    for (auto& p : flipped) p.second = -p.second;
    return std::min(residual(y), residual(flipped));
}

// ---------------------------------------------------------------------------
// Token scanner by character class: 'w' word byte, 's' space, 'p' other.

inline std::vector<std::string> scan_tokens(std::string_view text) {
    auto cls = [](unsigned char c) {
        if (c >= 0x80 || std::isalnum(c)) return 'w';
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') return 's';
        return 'p';
    };
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        const char k = cls(c);
        if (k == 'w') {
            cur += static_cast<char>(c);
            continue;
        }
        if (!cur.empty()) out.push_back(std::exchange(cur, {}));
        if (k == 'p') out.emplace_back(1, static_cast<char>(c));
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline std::map<std::string, int> multiset(const std::vector<std::string>& toks) {
    std::map<std::string, int> m;
    for (const auto& t : toks) ++m[t];
    return m;
}

// ---------------------------------------------------------------------------
// Corpus quality filter, straight from its definition.

inline bool filter_reference(const std::string& text, const std::map<std::string, std::string>& metadata,
                             std::size_t min_words) {
    std::size_t words = 0;
    bool in_word = false;
    for (unsigned char c : text) {
        const bool space = std::isspace(c) != 0;
        if (!space && !in_word) ++words;
        in_word = !space;
    }
    if (words <= min_words) return false;
    auto g = metadata.find("gender");
    if (g == metadata.end() || g->second.find_first_not_of(" \t\r\n") == std::string::npos) return false;
    for (const char* bad : {"http", "urlLink", ":)", "*", "=)", "&nbsp", "<U"}) {
        if (text.find(bad) != std::string::npos) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Minimal XML well-formedness check: balanced, properly nested tags, quoted
// attributes, known entities only. Returns the element names in document order.

struct XmlCheck {
    bool ok = false;
    std::string error;
    std::vector<std::string> elements;
    std::vector<std::map<std::string, std::string>> attributes;
};

inline XmlCheck check_xml(std::string_view s) {
    XmlCheck r;
    std::vector<std::string> stack;
    std::size_t i = 0;
    auto fail = [&](std::string why) {
        r.ok = false;
        r.error = std::move(why) + " at " + std::to_string(i);
        return r;
    };
    auto entity_ok = [&](std::size_t at) {
        for (const char* e : {"&amp;", "&lt;", "&gt;", "&quot;", "&apos;"}) {
            if (s.substr(at, std::char_traits<char>::length(e)) == e) return true;
        }
        return false;
    };
    bool seen_root = false;
    while (i < s.size()) {
        if (s[i] != '<') {
            if (s[i] == '&' && !entity_ok(i)) return fail("bad entity");
            if (stack.empty() && !std::isspace(static_cast<unsigned char>(s[i]))) return fail("text outside root");
            ++i;
            continue;
        }
        if (s.substr(i, 5) == "<?xml") {
            auto e = s.find("?>", i);
            if (e == std::string_view::npos) return fail("unterminated declaration");
            i = e + 2;
            continue;
        }
        if (s.substr(i, 4) == "<!--") {
            auto e = s.find("-->", i);
            if (e == std::string_view::npos) return fail("unterminated comment");
            i = e + 3;
            continue;
        }
        const bool closing = i + 1 < s.size() && s[i + 1] == '/';
        std::size_t j = i + (closing ? 2 : 1);
        std::string name;
        while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '-' || s[j] == '_' || s[j] == ':')) name += s[j++];
        if (name.empty()) return fail("empty tag name");
        if (closing) {
            while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
            if (j >= s.size() || s[j] != '>') return fail("bad closing tag");
            if (stack.empty() || stack.back() != name) return fail("mismatched </" + name + ">");
            stack.pop_back();
            i = j + 1;
            continue;
        }
        if (stack.empty() && seen_root) return fail("second root element");
        seen_root = true;
        std::map<std::string, std::string> attrs;
        while (true) {
            while (j < s.size() && std::isspace(static_cast<unsigned char>(s[j]))) ++j;
            if (j >= s.size()) return fail("unterminated tag");
            if (s[j] == '>') {
                stack.push_back(name);
                ++j;
                break;
            }
            if (s.substr(j, 2) == "/>") {
                j += 2;
                break;
            }
            std::string an;
            while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '-' || s[j] == '_' || s[j] == ':')) an += s[j++];
            if (an.empty() || j >= s.size() || s[j] != '=') return fail("bad attribute");
            ++j;
            if (j >= s.size() || (s[j] != '"' && s[j] != '\'')) return fail("unquoted attribute");
            const char q = s[j++];
            std::string av;
            while (j < s.size() && s[j] != q) {
                if (s[j] == '<') return fail("'<' in attribute");
                if (s[j] == '&' && !entity_ok(j)) return fail("bad entity in attribute");
                av += s[j++];
            }
            if (j >= s.size()) return fail("unterminated attribute");
            ++j;
            if (attrs.count(an)) return fail("duplicate attribute " + an);
            attrs[an] = av;
        }
        r.elements.push_back(name);
        r.attributes.push_back(std::move(attrs));
        i = j;
    }
    if (!stack.empty()) return fail("unclosed <" + stack.back() + ">");
    if (!seen_root) return fail("no root element");
    r.ok = true;
    return r;
}

inline std::size_t count_class(const XmlCheck& x, const std::string& element, const std::string& cls) {
    std::size_t n = 0;
    for (std::size_t k = 0; k < x.elements.size(); ++k) {
        auto it = x.attributes[k].find("class");
        if (x.elements[k] == element && it != x.attributes[k].end() && it->second == cls) ++n;
    }
    return n;
}

// ---------------------------------------------------------------------------
// Backend whose responses come from a test-supplied function.

class ScriptedBackend : public gpv::backend::Backend {
public:
    using Script = std::function<gpv::backend::ChatResponse(const gpv::backend::ChatRequest&)>;
    explicit ScriptedBackend(Script script, std::size_t limit = 4) : Backend(limit), script_(std::move(script)) {}
    std::string id() const override { return "scripted"; }
    std::size_t calls() const { return calls_.load(); }

protected:
    gpv::backend::ChatResponse do_generate(const gpv::backend::ChatRequest& r) override {
        ++calls_;
        return script_(r);
    }

private:
    Script script_;
    std::atomic<std::size_t> calls_{0};
};

inline gpv::backend::ChatResponse text(std::string t) { return {std::move(t), {}}; }

}  // namespace oracle
