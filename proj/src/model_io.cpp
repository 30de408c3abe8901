#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "stopchain/errors.hpp"
#include "stopchain/io.hpp"

namespace stopchain {

namespace {

using nlohmann::json;

std::string line_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

[[noreturn]] void schema_error(const std::string& msg) {
    throw ModelError("model schema: " + msg, {msg});
}

std::size_t as_index(const json& j, const std::string& what) {
    if (!j.is_number_integer() || j.get<long long>() < 0) {
        schema_error(what + " must be a nonnegative integer");
    }
    return j.get<std::size_t>();
}

double as_number(const json& j, const std::string& what) {
    if (!j.is_number()) {
        schema_error(what + " must be a number");
    }
    return j.get<double>();
}

}  // namespace

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Model parse_model(std::string_view text, bool check_invariants) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        const std::size_t at = e.byte > 0 ? e.byte - 1 : 0;
        const std::string msg = "malformed JSON at " + line_column(text, at) + ": " + e.what();
        throw ModelError(msg, {msg});
    }
    if (!doc.is_object()) {
        schema_error("top level must be an object");
    }
    for (const char* key : {"n_states", "rates", "payoff", "r"}) {
        if (!doc.contains(key)) {
            schema_error(std::string("missing key \"") + key + "\"");
        }
    }
    const std::size_t n = as_index(doc["n_states"], "n_states");
    if (n == 0) {
        schema_error("n_states must be positive");
    }
    if (!doc["rates"].is_array()) {
        schema_error("rates must be an array");
    }
    std::vector<Rate> rates;
    for (std::size_t k = 0; k < doc["rates"].size(); ++k) {
        const json& e = doc["rates"][k];
        const std::string where = "rates[" + std::to_string(k) + "]";
        if (!e.is_array() || e.size() != 3) {
            schema_error(where + " must be [from, to, rate]");
        }
        const std::size_t from = as_index(e[0], where + " from");
        const std::size_t to = as_index(e[1], where + " to");
        if (from >= n || to >= n) {
            schema_error(where + " refers to a state >= n_states");
        }
        if (from == to) {
            schema_error(where + " has from == to (" + std::to_string(from) +
                         "); diagonal entries are implied");
        }
        rates.push_back({from, to, as_number(e[2], where + " rate")});
    }
    if (!doc["payoff"].is_array()) {
        schema_error("payoff must be an array");
    }
    Model model;
    for (std::size_t k = 0; k < doc["payoff"].size(); ++k) {
        model.payoff.values.push_back(as_number(doc["payoff"][k], "payoff[" + std::to_string(k) + "]"));
    }
    model.payoff.discount_rate = as_number(doc["r"], "r");
    if (doc.contains("labels")) {
        const json& labels = doc["labels"];
        if (!labels.is_array()) {
            schema_error("labels must be an array of strings");
        }
        for (const json& l : labels) {
            if (!l.is_string()) {
                schema_error("labels must be an array of strings");
            }
            model.labels.push_back(l.get<std::string>());
        }
        if (model.labels.size() != n) {
            schema_error("labels must have n_states entries");
        }
    }
    model.generator = Generator(n, std::move(rates));
    if (check_invariants) {
        require_valid(model.generator, model.payoff);
    }
    return model;
}

Model load_model(const std::filesystem::path& path, bool check_invariants) {
    std::string text;
    try {
        text = read_text(path);
    } catch (const std::runtime_error& e) {
        throw ModelError(e.what(), {e.what()});
    }
    return parse_model(text, check_invariants);
}

std::string dump_model(const Model& model) {
    json doc;
    doc["n_states"] = model.generator.size();
    json rates = json::array();
    for (const Rate& r : model.generator.triplets()) {
        rates.push_back(json::array({r.from, r.to, r.value}));
    }
    doc["rates"] = std::move(rates);
    doc["payoff"] = model.payoff.values;
    doc["r"] = model.payoff.discount_rate;
    if (!model.labels.empty()) {
        doc["labels"] = model.labels;
    }
    return doc.dump(2) + "\n";
}

void save_model(const std::filesystem::path& path, const Model& model) {
    write_text(path, dump_model(model));
}

std::string report_to_json(const SolverReport& report) {
    json doc;
    doc["value"] = report.final_value;
    doc["stopping_set"] = report.final_stopping_set.indices();
    doc["iterations"] = report.iterations;
    json trace = json::array();
    for (const TraceEntry& e : report.trace) {
        trace.push_back({{"eliminated", e.eliminated}, {"max_residual", e.max_residual}});
    }
    doc["trace"] = std::move(trace);
    doc["converged"] = report.converged;
    return doc.dump(2) + "\n";
}

void write_text(const std::filesystem::path& path, std::string_view text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) {
        throw std::runtime_error("write to " + path.string() + " failed");
    }
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace stopchain
