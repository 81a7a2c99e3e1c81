#pragma once

// Domains by preset id or JSON descriptor, and JSON forms of points and paths.
//
//   {"kind":"disk"}  {"kind":"ball","n":2}  {"kind":"ellipsoid","m":2}
//   {"kind":"spsc"}  {"kind":"dent"}
//   {"kind":"general","rho":"abs2(z1) + abs2(z2) - 1","n":2,
//    "class":{"type":"convex","m":2,"C":1.5} | {"type":"spsc","bb":{...}},
//    "bounding_radius":2, "reference":[[0,0],[0,0]], "id":"mine", "nikolov_A":2}

#include <fstream>
#include <json.hpp>
#include <regex>
#include <sstream>

#include "kob/metric.hpp"

namespace kob {

inline std::vector<std::string> preset_ids()
{
    return {"disk", "ball2", "ball3", "ball4", "ellipsoid1", "ellipsoid2", "ellipsoid3", "spsc", "dent"};
}

/// disk, ballN (N = 2..4), ellipsoidM (M >= 1), spsc, dent.
inline DomainSpec make_preset(const std::string& id)
{
    std::smatch m;
    if (id == "disk") return make_unit_disk();
    if (id == "spsc") return make_spsc_preset();
    if (id == "dent") return make_dent_preset();
    static const std::regex ball(R"(ball([2-4]))"), ell(R"(ellipsoid([1-9][0-9]?))");
    if (std::regex_match(id, m, ball)) return make_unit_ball(std::stoul(m[1]));
    if (std::regex_match(id, m, ell)) return make_ellipsoid(std::stoi(m[1]));
    fail(Errc::InvalidInput, "unknown domain preset '" + id + "'");
}

// Point and path JSON: a point is an array of [re, im] pairs.

inline nlohmann::json point_json(const CPoint& z)
{
    nlohmann::json a = nlohmann::json::array();
    for (std::size_t k = 0; k < z.dim(); ++k) a.push_back({z[k].real(), z[k].imag()});
    return a;
}

inline CPoint point_from_json(const nlohmann::json& j)
{
    if (!j.is_array() || j.empty() || j.size() > kMaxDim) fail(Errc::ParseError, "point must be an array of 1..4 [re, im] pairs");
    CPoint z(j.size());
    for (std::size_t k = 0; k < j.size(); ++k) {
        const auto& c = j[k];
        if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number())
            fail(Errc::ParseError, "point coordinate " + std::to_string(k) + " must be [re, im]");
        z[k] = cplx(c[0].get<double>(), c[1].get<double>());
    }
    if (!z.finite()) fail(Errc::ParseError, "point coordinates must be finite");
    return z;
}

inline nlohmann::json path_json(const Polyline& p)
{
    nlohmann::json a = nlohmann::json::array();
    for (const CPoint& v : p.vertices) a.push_back(point_json(v));
    return a;
}

inline Polyline path_from_json(const nlohmann::json& j)
{
    if (!j.is_array()) fail(Errc::ParseError, "path must be an array of points");
    Polyline p;
    for (const auto& v : j) p.vertices.push_back(point_from_json(v));
    return p;
}

namespace detail {

/// "line L, column C" of a byte offset; nlohmann reports the offset one past the bad byte.
inline std::string text_position(const std::string& text, std::size_t byte)
{
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

inline nlohmann::json parse_json_text(const std::string& text, const std::string& what)
{
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        fail(Errc::ParseError, what + ": " + text_position(text, e.byte) + ": malformed JSON");
    }
}

template <class T>
T field(const nlohmann::json& j, const char* key, const std::string& where)
{
    if (!j.contains(key)) fail(Errc::ParseError, where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(Errc::ParseError, where + ": field '" + key + "' has the wrong type");
    }
}

template <class T>
T field_or(const nlohmann::json& j, const char* key, T fallback, const std::string& where)
{
    return j.contains(key) ? field<T>(j, key, where) : fallback;
}

inline BBConfig bb_from_json(const nlohmann::json& j, const std::string& where)
{
    if (!j.is_object()) fail(Errc::ParseError, where + ": bb must be an object");
    BBConfig b;
    b.epsilon = field_or(j, "epsilon", b.epsilon, where);
    b.epsilon0 = field_or(j, "epsilon0", b.epsilon0, where);
    b.C_bb = field_or(j, "C_bb", b.C_bb, where);
    b.C_lower = field_or(j, "C_lower", b.C_lower, where);
    b.C1 = field_or(j, "C1", b.C1, where);
    b.validate();
    return b;
}

inline Classification class_from_json(const nlohmann::json& j, const std::string& where)
{
    if (!j.is_object()) fail(Errc::ParseError, where + ": class must be an object");
    const std::string type = field<std::string>(j, "type", where);
    if (type == "convex") {
        ConvexClass c;
        c.m = field_or(j, "m", 1.0, where);
        require(std::isfinite(c.m) && c.m >= 1.0, where + ": convexity order m must be >= 1");
        if (j.contains("C") && !j["C"].is_null()) c.C = field<double>(j, "C", where);
        return c;
    }
    if (type == "spsc") return SPSCClass{j.contains("bb") ? bb_from_json(j["bb"], where) : BBConfig{}};
    fail(Errc::ParseError, where + ": class type must be 'convex' or 'spsc'");
}

} // namespace detail

inline DomainSpec domain_from_json(const nlohmann::json& j, const std::string& where = "domain")
{
    using detail::field;
    using detail::field_or;
    if (!j.is_object()) fail(Errc::ParseError, where + ": descriptor must be a JSON object");
    const std::string kind = field<std::string>(j, "kind", where);
    DomainSpec d;
    if (kind == "disk") {
        d = make_unit_disk();
    } else if (kind == "ball") {
        const int n = field<int>(j, "n", where);
        require(n >= 2 && n <= static_cast<int>(kMaxDim), where + ": ball dimension must be in [2, 4]");
        d = make_unit_ball(static_cast<std::size_t>(n));
    } else if (kind == "ellipsoid") {
        const int m = field<int>(j, "m", where);
        require(m >= 1, where + ": ellipsoid exponent must be >= 1");
        d = make_ellipsoid(m);
    } else if (kind == "spsc" || kind == "dent") {
        d = kind == "spsc" ? make_spsc_preset() : make_dent_preset();
        if (j.contains("bb")) d = d.with_classification(SPSCClass{detail::bb_from_json(j["bb"], where)});
    } else if (kind == "general") {
        const std::string rho = field<std::string>(j, "rho", where);
        const int n = field<int>(j, "n", where);
        require(n >= 1 && n <= static_cast<int>(kMaxDim), where + ": dimension must be in [1, 4]");
        if (!j.contains("class")) fail(Errc::ParseError, where + ": missing field 'class'");
        const Classification cls = detail::class_from_json(j["class"], where);
        const double R = field_or(j, "bounding_radius", 2.0, where);
        std::optional<CPoint> ref;
        if (j.contains("reference")) {
            ref = point_from_json(j["reference"]);
            require(ref->dim() == static_cast<std::size_t>(n), where + ": reference point has the wrong dimension");
        }
        d = make_general(rho, static_cast<std::size_t>(n), cls, R, ref, field_or<std::string>(j, "id", "general", where));
    } else {
        fail(Errc::ParseError, where + ": unknown kind '" + kind + "'");
    }
    if (j.contains("id") && kind != "general") d.id = field<std::string>(j, "id", where);
    if (j.contains("nikolov_A")) {
        d.nikolov_A = field<double>(j, "nikolov_A", where);
        require(std::isfinite(d.nikolov_A) && d.nikolov_A > 0.0, where + ": nikolov_A must be positive");
    }
    return d;
}

inline DomainSpec domain_from_text(const std::string& text, const std::string& where = "domain")
{
    return domain_from_json(detail::parse_json_text(text, where), where);
}

/// A preset id, or a path to a JSON descriptor file.
inline DomainSpec domain_from_arg(const std::string& arg)
{
    for (const std::string& id : preset_ids())
        if (arg == id) return make_preset(id);
    std::ifstream in(arg);
    if (!in) {
        if (arg.find(".json") == std::string::npos) return make_preset(arg); // reports the unknown preset
        fail(Errc::InvalidInput, "cannot open domain file '" + arg + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return domain_from_text(ss.str(), arg);
}

/// Descriptor that rebuilds D, recorded in summaries.
inline nlohmann::json domain_json(const DomainSpec& D)
{
    nlohmann::json j;
    switch (D.kind) {
    case DomainKind::UnitDisk: j["kind"] = "disk"; break;
    case DomainKind::UnitBall: j = {{"kind", "ball"}, {"n", D.dim()}}; break;
    case DomainKind::ComplexEllipsoid: j = {{"kind", "ellipsoid"}, {"m", D.exponent}}; break;
    case DomainKind::GeneralDefining: {
        const std::string f = D.rho->formula();
        if (f == PerturbedSphere(2, 0.1, 3).formula() || f == PerturbedSphere(2, 0.24, 4).formula()) {
            j["kind"] = f == PerturbedSphere(2, 0.1, 3).formula() ? "spsc" : "dent";
            const BBConfig& b = D.spsc()->bb;
            j["bb"] = {{"epsilon", b.epsilon}, {"epsilon0", b.epsilon0}, {"C_bb", b.C_bb}, {"C_lower", b.C_lower}, {"C1", b.C1}};
            break;
        }
        j = {{"kind", "general"}, {"rho", D.rho->formula()}, {"n", D.dim()}};
        if (const ConvexClass* c = D.convex()) {
            j["class"] = {{"type", "convex"}, {"m", c->m}};
            j["class"]["C"] = c->C ? nlohmann::json(*c->C) : nlohmann::json(nullptr);
        } else {
            const BBConfig& b = D.spsc()->bb;
            j["class"] = {{"type", "spsc"},
                          {"bb",
                           {{"epsilon", b.epsilon},
                            {"epsilon0", b.epsilon0},
                            {"C_bb", b.C_bb},
                            {"C_lower", b.C_lower},
                            {"C1", b.C1}}}};
        }
        j["bounding_radius"] = D.bounding_radius;
        j["reference"] = point_json(D.reference);
        break;
    }
    }
    j["id"] = D.id;
    j["nikolov_A"] = D.nikolov_A;
    return j;
}

} // namespace kob
