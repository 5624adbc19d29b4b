#pragma once

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "kdiff/differential.hpp"
#include "kdiff/flat_surface.hpp"

namespace kdiff {

using json = nlohmann::json;

struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline cplx complex_from_json(const json& j, const char* field) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw SchemaError(std::string("field '") + field + "' must be [re, im]");
    return {j[0].get<double>(), j[1].get<double>()};
}

template <typename T>
T require(const json& j, const char* field) {
    if (!j.contains(field)) throw SchemaError(std::string("missing field '") + field + "'");
    try {
        return j.at(field).get<T>();
    } catch (const json::exception&) {
        throw SchemaError(std::string("field '") + field + "' has the wrong type");
    }
}

// ---- differential documents -------------------------------------------------

inline RationalKDifferential parse_differential(const json& doc) {
    int k = require<int>(doc, "k");
    if (k < 2) throw SchemaError("field 'k' must be >= 2");
    cplx leading(1.0, 0.0);
    if (doc.contains("leading")) leading = complex_from_json(doc.at("leading"), "leading");
    if (leading == cplx(0.0)) throw SchemaError("field 'leading' must be nonzero");
    std::vector<DivisorEntry> div;
    auto read_list = [&](const char* name, int sign) {
        if (!doc.contains(name)) return;
        if (!doc.at(name).is_array()) throw SchemaError(std::string("field '") + name + "' must be an array");
        for (const auto& e : doc.at(name)) {
            cplx z = complex_from_json(e.contains("z") ? e.at("z") : json(), "z");
            int m = require<int>(e, "m");
            if (m <= 0) throw SchemaError(std::string("multiplicities in '") + name + "' must be positive");
            div.push_back({z, sign * m});
        }
    };
    read_list("zeros", +1);
    read_list("poles", -1);
    try {
        return RationalKDifferential(k, leading, std::move(div));
    } catch (const std::invalid_argument& e) {
        throw SchemaError(e.what());
    }
}

inline json emit_differential(const RationalKDifferential& psi) {
    json doc;
    doc["k"] = psi.k();
    doc["leading"] = complex_to_json(psi.leading());
    doc["zeros"] = json::array();
    doc["poles"] = json::array();
    for (const auto& d : psi.divisor()) {
        json e;
        e["z"] = complex_to_json(d.position);
        e["m"] = std::abs(d.order);
        doc[d.order > 0 ? "zeros" : "poles"].push_back(e);
    }
    return doc;
}

// ---- surface documents ------------------------------------------------------

inline FlatSurface parse_surface(const json& doc, FlatSurface::Options opts = FlatSurface::Options()) {
    int k = require<int>(doc, "k");
    std::vector<std::vector<cplx>> polys;
    for (const auto& pj : require<json>(doc, "polygons")) {
        std::vector<cplx> P;
        for (const auto& vj : require<json>(pj, "vertices")) P.push_back(complex_from_json(vj, "vertices"));
        polys.push_back(std::move(P));
    }
    auto edge_ref = [](const json& j, const char* field) {
        if (!j.is_array() || j.size() != 2) throw SchemaError(std::string("field '") + field + "' must be [poly, edge]");
        return EdgeRef{j[0].get<int>(), j[1].get<int>()};
    };
    std::vector<Gluing> gl;
    if (doc.contains("gluings"))
        for (const auto& gj : doc.at("gluings"))
            gl.push_back({edge_ref(require<json>(gj, "from"), "from"),
                          edge_ref(require<json>(gj, "to"), "to"), require<int>(gj, "rot")});
    std::vector<VertexMark> marks;
    if (doc.contains("marks"))
        for (const auto& mj : doc.at("marks")) {
            auto v = require<json>(mj, "vertex");
            if (!v.is_array() || v.size() != 2) throw SchemaError("field 'vertex' must be [poly, idx]");
            marks.push_back({v[0].get<int>(), v[1].get<int>(), require<std::string>(mj, "label"),
                             require<int>(mj, "order")});
        }
    std::vector<InfiniteCylinder> cyls;
    if (doc.contains("cylinders"))
        for (const auto& cj : doc.at("cylinders")) {
            InfiniteCylinder c;
            c.circumference = require<double>(cj, "circumference");
            if (cj.contains("edges"))
                for (const auto& ej : cj.at("edges")) c.edges.push_back(edge_ref(ej, "edges"));
            if (cj.contains("label")) c.label = cj.at("label").get<std::string>();
            cyls.push_back(std::move(c));
        }
    try {
        return FlatSurface(k, std::move(polys), std::move(gl), std::move(marks), std::move(cyls), opts);
    } catch (const std::invalid_argument& e) {
        throw SchemaError(e.what());
    }
}

inline json emit_surface(const FlatSurface& s) {
    json doc;
    doc["k"] = s.k();
    doc["polygons"] = json::array();
    for (const auto& P : s.polygons()) {
        json pj;
        pj["vertices"] = json::array();
        for (cplx v : P) pj["vertices"].push_back(complex_to_json(v));
        doc["polygons"].push_back(pj);
    }
    doc["gluings"] = json::array();
    for (const auto& g : s.gluings()) {
        json gj;
        gj["from"] = json::array({g.from.poly, g.from.edge});
        gj["to"] = json::array({g.to.poly, g.to.edge});
        gj["rot"] = g.rot;
        doc["gluings"].push_back(gj);
    }
    doc["marks"] = json::array();
    for (const auto& m : s.marks()) {
        json mj;
        mj["vertex"] = json::array({m.poly, m.vertex});
        mj["label"] = m.label;
        mj["order"] = m.order;
        doc["marks"].push_back(mj);
    }
    doc["cylinders"] = json::array();
    for (const auto& c : s.cylinders()) {
        json cj;
        cj["circumference"] = c.circumference;
        cj["edges"] = json::array();
        for (const auto& e : c.edges) cj["edges"].push_back(json::array({e.poly, e.edge}));
        if (!c.label.empty()) cj["label"] = c.label;
        doc["cylinders"].push_back(cj);
    }
    return doc;
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SchemaError("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw SchemaError("invalid JSON in " + path + ": " + e.what());
    }
    return j;
}

inline void save_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw SchemaError("cannot write file: " + path);
    out << j.dump(2) << "\n";
}

}  // namespace kdiff
