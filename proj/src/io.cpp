#include "cirl/io.hpp"

#include "cirl/errors.hpp"

#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace cirl {

using nlohmann::json;

namespace {

const json& require(const json& obj, const char* key) {
    if (!obj.is_object() || !obj.contains(key)) throw SchemaError(std::string("missing field '") + key + "'");
    return obj.at(key);
}

int require_int(const json& obj, const char* key) {
    const json& v = require(obj, key);
    if (!v.is_number_integer()) throw SchemaError(std::string("field '") + key + "' must be an integer");
    return v.get<int>();
}

double as_real(const json& v, const std::string& what) {
    if (!v.is_number()) throw SchemaError(what + " must be a number");
    return v.get<double>();
}

int as_int(const json& v, const std::string& what) {
    if (!v.is_number_integer()) throw SchemaError(what + " must be an integer");
    return v.get<int>();
}

void check_header(const json& doc, const char* format) {
    if (!doc.is_object()) throw SchemaError("document must be a JSON object");
    if (doc.contains("format") && doc.at("format") != format)
        throw SchemaError(std::string("expected format '") + format + "'");
    if (doc.contains("version") && doc.at("version") != 1) throw SchemaError("unsupported document version");
}

json parse_json(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("malformed JSON: ") + e.what());
    }
}

Matrix parse_transition(const json& entry, int m, int action) {
    const std::string where = "transitions[" + std::to_string(action) + "]";
    Matrix p = Matrix::Zero(m, m);
    if (entry.is_object() && entry.contains("dense")) {
        const json& rows = entry.at("dense");
        if (!rows.is_array() || static_cast<int>(rows.size()) != m) throw SchemaError(where + ".dense must have m rows");
        for (int i = 0; i < m; ++i) {
            const json& row = rows[i];
            if (!row.is_array() || static_cast<int>(row.size()) != m)
                throw SchemaError(where + ".dense row " + std::to_string(i) + " must have m entries");
            for (int j = 0; j < m; ++j) p(i, j) = as_real(row[j], where + " entry");
        }
    } else if (entry.is_object() && entry.contains("sparse")) {
        const json& triplets = entry.at("sparse");
        if (!triplets.is_array()) throw SchemaError(where + ".sparse must be an array");
        for (const json& t : triplets) {
            if (!t.is_array() || t.size() != 3) throw SchemaError(where + ".sparse entries must be [row, col, value]");
            const int i = as_int(t[0], where + " row");
            const int j = as_int(t[1], where + " col");
            if (i < 0 || i >= m || j < 0 || j >= m) throw SchemaError(where + " has an index out of range");
            p(i, j) += as_real(t[2], where + " value");
        }
    } else {
        throw SchemaError(where + " must contain 'dense' or 'sparse'");
    }
    return p;
}

}  // namespace

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw SchemaError("cannot write '" + tmp + "'");
        out << content;
        if (!out.flush()) throw SchemaError("failed writing '" + tmp + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw SchemaError("cannot move '" + tmp + "' to '" + path + "': " + ec.message());
}

std::string format_real(double value) {
    if (value == 0.0) value = 0.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    return buf;
}

MdpDocument parse_mdp(const std::string& text) {
    const json doc = parse_json(text);
    check_header(doc, "cirl-mdp");
    const int m = require_int(doc, "num_states");
    const int k = require_int(doc, "num_actions");
    if (m < 1 || k < 1) throw SchemaError("num_states and num_actions must be positive");
    const double gamma = as_real(require(doc, "discount"), "discount");
    const json& trans = require(doc, "transitions");
    if (!trans.is_array() || static_cast<int>(trans.size()) != k)
        throw SchemaError("transitions must hold one entry per action");

    std::vector<Matrix> mats;
    mats.reserve(k);
    for (int a = 0; a < k; ++a) mats.push_back(parse_transition(trans[a], m, a));

    std::optional<TransitionModel> model;
    try {
        model.emplace(std::move(mats), gamma);
    } catch (const InvalidInput& e) {
        throw SchemaError(std::string("invalid transition model: ") + e.what());
    }
    MdpDocument out{std::move(*model), std::nullopt, std::nullopt, std::nullopt};

    if (doc.contains("expert_policy")) {
        const json& pol = doc.at("expert_policy");
        if (!pol.is_array() || static_cast<int>(pol.size()) != m) throw SchemaError("expert_policy must have m entries");
        Policy pi;
        for (const json& a : pol) pi.actions.push_back(as_int(a, "expert_policy entry"));
        try {
            check_policy(out.model, pi);
        } catch (const InvalidInput& e) {
            throw SchemaError(e.what());
        }
        out.expert = std::move(pi);
    }
    if (doc.contains("reward")) {
        const json& rw = doc.at("reward");
        if (!rw.is_array() || static_cast<int>(rw.size()) != m) throw SchemaError("reward must have m entries");
        Vector r(m);
        for (int i = 0; i < m; ++i) r[i] = as_real(rw[i], "reward entry");
        out.reward = std::move(r);
    }
    if (doc.contains("grid_side")) out.grid_side = as_int(doc.at("grid_side"), "grid_side");
    return out;
}

std::string serialize_mdp(const MdpDocument& doc, bool sparse) {
    const TransitionModel& model = doc.model;
    const int m = model.num_states();
    json out;
    out["format"] = "cirl-mdp";
    out["version"] = 1;
    out["num_states"] = m;
    out["num_actions"] = model.num_actions();
    out["discount"] = model.discount();
    json trans = json::array();
    for (int a = 0; a < model.num_actions(); ++a) {
        const Matrix& p = model.matrix(a);
        json entry;
        if (sparse) {
            json triplets = json::array();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j)
                    if (p(i, j) != 0.0) triplets.push_back(json::array({i, j, p(i, j)}));
            entry["sparse"] = std::move(triplets);
        } else {
            json rows = json::array();
            for (int i = 0; i < m; ++i) {
                json row = json::array();
                for (int j = 0; j < m; ++j) row.push_back(p(i, j));
                rows.push_back(std::move(row));
            }
            entry["dense"] = std::move(rows);
        }
        trans.push_back(std::move(entry));
    }
    out["transitions"] = std::move(trans);
    if (doc.expert) out["expert_policy"] = doc.expert->actions;
    if (doc.reward) out["reward"] = std::vector<double>(doc.reward->begin(), doc.reward->end());
    if (doc.grid_side) out["grid_side"] = *doc.grid_side;
    return out.dump() + "\n";
}

MdpDocument read_mdp_file(const std::string& path) {
    try {
        return parse_mdp(read_text_file(path));
    } catch (const SchemaError& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

TrajectoryDocument parse_trajectory(const std::string& text) {
    const json doc = parse_json(text);
    check_header(doc, "cirl-trajectory");
    TrajectoryDocument out;
    const json& steps = require(doc, "steps");
    if (!steps.is_array()) throw SchemaError("steps must be an array");
    for (const json& st : steps) {
        if (!st.is_array() || st.size() != 2) throw SchemaError("each step must be [state, action]");
        out.trajectory.steps.push_back({as_int(st[0], "step state"), as_int(st[1], "step action")});
    }
    const json& part = require(doc, "partition");
    if (!part.is_array()) throw SchemaError("partition must be an array");
    for (const json& t : part) out.trajectory.partition.push_back(as_int(t, "partition index"));
    if (doc.contains("reward_states")) {
        const json& rs = doc.at("reward_states");
        if (!rs.is_array()) throw SchemaError("reward_states must be an array");
        std::vector<int> states;
        for (const json& s : rs) states.push_back(as_int(s, "reward state"));
        out.reward_states = std::move(states);
    }
    return out;
}

std::string serialize_trajectory(const TrajectoryDocument& doc) {
    json out;
    out["format"] = "cirl-trajectory";
    out["version"] = 1;
    json steps = json::array();
    for (const Step& st : doc.trajectory.steps) steps.push_back(json::array({st.state, st.action}));
    out["steps"] = std::move(steps);
    out["partition"] = doc.trajectory.partition;
    if (doc.reward_states) out["reward_states"] = *doc.reward_states;
    return out.dump() + "\n";
}

TrajectoryDocument read_trajectory_file(const std::string& path) {
    try {
        return parse_trajectory(read_text_file(path));
    } catch (const SchemaError& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

}  // namespace cirl
