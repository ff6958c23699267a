#pragma once

#include <string>

#include "json.hpp"
#include "qp/model.hpp"

namespace qp {

using json = nlohmann::ordered_json;

// Model config document: {"n1","n2","builder":{...}} or an explicit
// {"grid": {"c1,c2": {"i,j": prob,...},...}, "mode": "..."} table.
ModelSpec load_model(const json& doc);
ModelSpec load_model_file(const std::string& path);

// full grid dump, loadable through the "table" builder
json model_to_json(const ModelSpec& spec);

// RA builder parameters from a {"kind":"ra",...} builder block
RaParams parse_ra_params(const json& builder, int n1, int n2);

}  // namespace qp
