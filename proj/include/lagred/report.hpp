#pragma once
#include <string>
#include <vector>

#include "lagred/geometry.hpp"

// forward declaration keeps json.hpp out of most translation units
#include <nlohmann/json_fwd.hpp>

namespace lagred {

struct CheckItem {
    std::string name;
    bool pass{false};
    std::string detail;
};

struct Report {
    std::string title;
    std::vector<CheckItem> items;

    bool passed() const;
    void add(const std::string& name, bool pass, const std::string& detail = "");
    /// convenience: pass iff the expression canonicalizes to literal zero
    void add_zero(const std::string& name, const Expr& residual);

    std::string to_text() const;
    nlohmann::json to_json() const;
};

nlohmann::json to_json(const VectorField& x, const std::string& role);
nlohmann::json to_json(const OneForm& a, const std::string& role);
nlohmann::json to_json(const TwoForm& w, const std::string& role);

} // namespace lagred
