// qcbm: train shallow variational circuits that load grayscale images into
// simulated quantum registers, reconstruct and verify them.
//
// Verbs: train, train-bae, metrics, sample, analyze, export.
// Exit codes: 0 success, 1 usage/config error, 2 compute error.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qcbm/analysis.hpp"
#include "qcbm/circuit.hpp"
#include "qcbm/image.hpp"
#include "qcbm/prob.hpp"
#include "qcbm/statevector.hpp"
#include "qcbm/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- config --

const json& schema() {
    // key -> default (null means required / no default)
    static const json doc = {
        {"image", nullptr},
        {"output_dir", "out"},
        {"seed", 1},
        {"threads", 1},
        {"max_qubits", 24},
        {"flat", false},
        {"flat_layers", 4},
        {"block_param", 2},
        {"parallel", 1},
        {"pad", true},
        {"schedule",
         {{"layers", json::array()},
          {"layers_per_stage", 2},
          {"two_qubit_budget", 0},
          {"param_budget", 0},
          {"iterations", json::array()},
          {"total_iterations", 400}}},
        {"optimizer",
         {{"learning_rate", 0.01},
          {"beta1", 0.9},
          {"beta2", 0.999},
          {"epsilon", 1e-8},
          {"kl_clamp", 1e-12}}},
    };
    return doc;
}

void check_keys(const json& value, const json& allowed, const std::string& prefix) {
    for (const auto& [key, sub] : value.items()) {
        if (!allowed.contains(key))
            throw ConfigError("unknown config key: " + prefix + key);
        if (sub.is_object() && allowed.at(key).is_object())
            check_keys(sub, allowed.at(key), prefix + key + ".");
    }
}

json load_config(const std::string& path) {
    json config = json::object();
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        try {
            in >> config;
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config is not valid JSON: ") + e.what());
        }
        if (!config.is_object()) throw ConfigError("config root must be a JSON object");
        check_keys(config, schema(), "");
    }
    return config;
}

template <typename T>
T config_get(const json& config, const std::string& section, const std::string& key, T fallback) {
    const json* node = &config;
    if (!section.empty()) {
        if (!config.contains(section)) return fallback;
        node = &config.at(section);
    }
    if (!node->contains(key)) return fallback;
    try {
        return node->at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config key has the wrong type: " +
                          (section.empty() ? key : section + "." + key));
    }
}

qcbm::TrainConfig optimizer_config(const json& config) {
    qcbm::TrainConfig train;
    train.learning_rate = config_get(config, "optimizer", "learning_rate", 0.01);
    train.adam_beta1 = config_get(config, "optimizer", "beta1", 0.9);
    train.adam_beta2 = config_get(config, "optimizer", "beta2", 0.999);
    train.adam_epsilon = config_get(config, "optimizer", "epsilon", 1e-8);
    train.kl_epsilon = config_get(config, "optimizer", "kl_clamp", 1e-12);
    train.seed = config_get<std::uint64_t>(config, "", "seed", 1);
    train.max_qubits = config_get(config, "", "max_qubits", 24);
    if (train.learning_rate <= 0) throw ConfigError("optimizer.learning_rate must be positive");
    return train;
}

std::vector<int> schedule_layers(const json& config, const qcbm::GridLayout& layout) {
    auto layers = config_get<std::vector<int>>(config, "schedule", "layers", {});
    if (!layers.empty()) {
        if (static_cast<int>(layers.size()) != layout.columns())
            throw ConfigError("schedule.layers must list one entry per grid column");
        return layers;
    }
    int two_qubit_budget = config_get(config, "schedule", "two_qubit_budget", 0);
    if (two_qubit_budget > 0) return qcbm::layers_for_two_qubit_budget(layout, two_qubit_budget);
    int param_budget = config_get(config, "schedule", "param_budget", 0);
    if (param_budget > 0) return qcbm::layers_for_param_budget(layout, param_budget);
    int per_stage = config_get(config, "schedule", "layers_per_stage", 2);
    if (per_stage < 0) throw ConfigError("schedule.layers_per_stage must be >= 0");
    return std::vector<int>(static_cast<std::size_t>(layout.columns()), per_stage);
}

qcbm::HierarchySchedule build_schedule(const json& config, const qcbm::GridLayout& layout,
                                       bool flat) {
    qcbm::HierarchySchedule schedule;
    if (flat) {
        int layers = config_get(config, "", "flat_layers", 4);
        int param_budget = config_get(config, "schedule", "param_budget", 0);
        if (param_budget > 0) {
            int per_layer = 2 * static_cast<int>(layout.active_qubits(layout.columns()).size()) +
                            static_cast<int>(layout.active_edges(layout.columns()).size());
            layers = std::max(1, param_budget / per_layer);
        }
        schedule = qcbm::HierarchySchedule::single_stage(layout, layers, 1);
    } else {
        std::vector<int> layers = schedule_layers(config, layout);
        schedule = qcbm::HierarchySchedule::from_layers(layout, layers);
    }
    auto iterations = config_get<std::vector<int>>(config, "schedule", "iterations", {});
    if (!iterations.empty()) {
        if (iterations.size() != schedule.stages.size())
            throw ConfigError("schedule.iterations must list one entry per stage");
        for (std::size_t s = 0; s < iterations.size(); ++s)
            schedule.stages[s].iterations = iterations[s];
    } else {
        int total = config_get(config, "schedule", "total_iterations", 400);
        std::vector<int> split = qcbm::proportional_iterations(layout, schedule.stages, total);
        for (std::size_t s = 0; s < split.size(); ++s) schedule.stages[s].iterations = split[s];
    }
    return schedule;
}

qcbm::GrayImage load_input_image(const json& config) {
    std::string path = config_get<std::string>(config, "", "image", "");
    if (path.empty()) throw ConfigError("no input image given (flag --image or config key)");
    try {
        qcbm::GrayImage image = qcbm::load_image(path);
        if (config_get(config, "", "pad", true)) image = qcbm::pad_to_pow2(image);
        return image;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

qcbm::GridLayout layout_for_image(const qcbm::GrayImage& image) {
    int j = qcbm::row_qubits(image);
    int k = qcbm::col_qubits(image);
    if (std::abs(j - k) > 1)
        throw ConfigError("image axes need qubit counts within 1 of each other (got " +
                          std::to_string(j) + " and " + std::to_string(k) + ")");
    return qcbm::GridLayout::from_axis_qubits(j, k);
}

// ----------------------------------------------------------- checkpoints --

struct Checkpoint {
    qcbm::ParameterizedCircuit circuit;
    std::vector<double> params;
    json meta;
};

void write_checkpoint(const fs::path& path, const qcbm::ParameterizedCircuit& circuit,
                      std::span<const double> params, const json& meta) {
    json doc = json::parse(qcbm::export_circuit(circuit, params, qcbm::ExportFormat::Json));
    doc["meta"] = meta;
    std::ofstream out(path);
    out << doc.dump(2) << "\n";
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
}

Checkpoint read_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open checkpoint: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        Checkpoint cp;
        auto [circuit, params] = qcbm::import_circuit(text);
        cp.circuit = std::move(circuit);
        cp.params = std::move(params);
        json doc = json::parse(text);
        cp.meta = doc.value("meta", json::object());
        return cp;
    } catch (const std::exception& e) {
        throw ConfigError("bad checkpoint " + path + ": " + e.what());
    }
}

qcbm::ProbabilityVector checkpoint_distribution(const Checkpoint& cp) {
    return qcbm::born_distribution(qcbm::run_circuit(cp.circuit, cp.params));
}

// ------------------------------------------------------------- reporting --

void write_loss_csv(const fs::path& path, const std::vector<qcbm::StageReport>& reports) {
    std::ofstream out(path);
    out << "iteration,stage,kl,tvd_full\n";
    long long iteration = 0;
    out.precision(12);
    for (const qcbm::StageReport& report : reports) {
        for (std::size_t i = 0; i < report.kl_trace.size(); ++i) {
            out << iteration++ << "," << report.stage << "," << report.kl_trace[i] << ","
                << report.tvd_full_trace[i] << "\n";
        }
    }
}

void write_stage_csv(const fs::path& path, const std::vector<qcbm::StageReport>& reports) {
    std::ofstream out(path);
    out << "stage,active_qubits,layers,iterations,final_kl,tvd_full,seconds\n";
    out.precision(12);
    for (const qcbm::StageReport& r : reports)
        out << r.stage << "," << r.active_qubits << "," << r.layers << "," << r.iterations << ","
            << r.final_kl << "," << r.tvd_full << "," << r.seconds << "\n";
}

json image_meta(const qcbm::GridLayout& layout, const qcbm::GrayImage& image, double norm,
                const std::string& source) {
    return {{"vertical_qubits", layout.vertical_qubits},
            {"horizontal_qubits", layout.horizontal_qubits},
            {"image_height", image.height},
            {"image_width", image.width},
            {"norm_constant", norm},
            {"source_image", source}};
}

// ------------------------------------------------------------- commands --

int cmd_train(const json& config) {
    qcbm::GrayImage image = load_input_image(config);
    bool flat = config_get(config, "", "flat", false);
    qcbm::GridLayout layout = layout_for_image(image);
    qcbm::HierarchySchedule schedule = build_schedule(config, layout, flat);
    qcbm::TrainConfig train_config = optimizer_config(config);
    qcbm::set_max_threads(config_get(config, "", "threads", 1));

    fs::path out_dir = config_get<std::string>(config, "", "output_dir", "out");
    fs::create_directories(out_dir);

    qcbm::HierarchicalResult result =
        qcbm::hierarchical_train(image, layout, schedule, train_config);

    qcbm::ProbabilityVector target = qcbm::image_to_distribution(image);
    qcbm::ProbabilityVector model =
        qcbm::born_distribution(qcbm::run_circuit(result.circuit, result.params));
    int n = layout.num_qubits();
    double kl = qcbm::kl_divergence(target, model, n);
    double tvd_full = qcbm::tvd(target, model, n);
    double fidelity = qcbm::classical_fidelity(target, model, n);

    json meta = image_meta(layout, image, target.norm_constant,
                           config_get<std::string>(config, "", "image", ""));
    meta["seed"] = train_config.seed;
    meta["two_qubit_gates"] = qcbm::count_two_qubit_gates(result.circuit);
    write_checkpoint(out_dir / "circuit.json", result.circuit, result.params, meta);
    write_loss_csv(out_dir / "loss.csv", result.reports);
    write_stage_csv(out_dir / "stages.csv", result.reports);
    qcbm::save_image(qcbm::distribution_to_image(model, image.height, image.width,
                                                 target.norm_constant),
                     (out_dir / "reconstruction.pgm").string());

    json metrics = {{"num_qubits", n},
                    {"num_params", result.circuit.num_params},
                    {"two_qubit_gates", qcbm::count_two_qubit_gates(result.circuit)},
                    {"kl", kl},
                    {"tvd", tvd_full},
                    {"fidelity", fidelity},
                    {"mode", flat ? "flat" : "hierarchical"}};
    std::ofstream(out_dir / "metrics.json") << metrics.dump(2) << "\n";

    std::cout << "trained " << n << " qubits, " << result.circuit.num_params << " parameters, "
              << qcbm::count_two_qubit_gates(result.circuit) << " two-qubit gates\n";
    std::cout << "KL " << kl << "  TVD " << tvd_full << "  F " << fidelity << "\n";
    std::cout << "artifacts in " << out_dir.string() << "\n";
    return 0;
}

int cmd_train_bae(const json& config) {
    qcbm::GrayImage image = load_input_image(config);
    int b = config_get(config, "", "block_param", 2);
    qcbm::ScheduleTemplate tmpl;
    tmpl.layers_per_stage = config_get(config, "schedule", "layers_per_stage", 2);
    tmpl.total_iterations = config_get(config, "schedule", "total_iterations", 400);
    qcbm::TrainConfig train_config = optimizer_config(config);
    int parallel = config_get(config, "", "parallel", 1);
    qcbm::set_max_threads(config_get(config, "", "threads", 1));

    // Report divisibility problems before any training starts.
    qcbm::BlockDecomposition probe;
    int qubits_block = 0;
    try {
        probe = qcbm::partition_blocks(image, b);
        qubits_block = qcbm::qubits_per_block(image.height, image.width, b);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }

    fs::path out_dir = config_get<std::string>(config, "", "output_dir", "out");
    fs::create_directories(out_dir);

    qcbm::BaeResult result = qcbm::train_bae(image, b, tmpl, train_config, parallel);

    json manifest;
    manifest["block_param"] = b;
    manifest["num_blocks"] = result.decomposition.num_blocks();
    manifest["assembled_tvd"] = result.assembled_tvd;
    manifest["blocks"] = json::array();
    for (const qcbm::BlockTrainResult& block : result.blocks) {
        char name[32];
        std::snprintf(name, sizeof(name), "block_%03d", block.block_id);
        json entry = {{"id", block.block_id},
                      {"tile_row", block.tile_row},
                      {"tile_col", block.tile_col},
                      {"qubits", qubits_block},
                      {"norm", block.norm},
                      {"final_kl", block.final_kl},
                      {"params", block.ok() ? block.circuit.num_params : 0}};
        if (!block.ok()) entry["error"] = block.error;
        manifest["blocks"].push_back(entry);
        if (block.ok() && block.norm > 0) {
            fs::path block_dir = out_dir / name;
            fs::create_directories(block_dir);
            json meta = {{"block_id", block.block_id},
                         {"tile_row", block.tile_row},
                         {"tile_col", block.tile_col},
                         {"norm", block.norm},
                         {"vertical_qubits", block.layout.vertical_qubits},
                         {"horizontal_qubits", block.layout.horizontal_qubits},
                         {"image_height", probe.tile_side_height},
                         {"image_width", probe.tile_side_width}};
            write_checkpoint(block_dir / "circuit.json", block.circuit, block.params, meta);
        }
    }
    std::ofstream(out_dir / "manifest.json") << manifest.dump(2) << "\n";
    qcbm::save_image(result.reconstruction, (out_dir / "assembled.pgm").string());

    int total_qubits = qubits_block * result.decomposition.num_blocks();
    std::ofstream summary(out_dir / "summary.csv");
    summary << "blocks,qubits_per_block,total_qubits,total_params,tvd\n";
    summary << result.decomposition.num_blocks() << "," << qubits_block << "," << total_qubits
            << "," << result.total_params << "," << result.assembled_tvd << "\n";

    std::cout << "blocks " << result.decomposition.num_blocks() << "  qubits/block "
              << qubits_block << "  total qubits " << total_qubits << "  total params "
              << result.total_params << "  TVD " << result.assembled_tvd << "\n";
    for (const qcbm::BlockTrainResult& block : result.blocks)
        if (!block.ok())
            std::cout << "block " << block.block_id << " failed: " << block.error << "\n";
    std::cout << "artifacts in " << out_dir.string() << "\n";
    return 0;
}

int cmd_metrics(const std::string& checkpoint_path, const std::string& image_path,
                std::vector<int> resolutions) {
    Checkpoint cp = read_checkpoint(checkpoint_path);
    qcbm::GrayImage image = qcbm::pad_to_pow2(qcbm::load_image(image_path));
    qcbm::ProbabilityVector target = qcbm::image_to_distribution(image);
    qcbm::ProbabilityVector model = checkpoint_distribution(cp);
    if (resolutions.empty()) resolutions.push_back(target.num_qubits);
    std::cout << "m,kl,tvd,fidelity\n";
    std::cout.precision(12);
    for (int m : resolutions) {
        std::cout << m << "," << qcbm::kl_divergence(target, model, m) << ","
                  << qcbm::tvd(target, model, m) << ","
                  << qcbm::classical_fidelity(target, model, m) << "\n";
    }
    return 0;
}

int cmd_sample(const std::string& checkpoint_path, std::uint64_t shots, std::uint64_t seed,
               const std::string& out) {
    Checkpoint cp = read_checkpoint(checkpoint_path);
    qcbm::ProbabilityVector model = checkpoint_distribution(cp);
    qcbm::ShotCounts counts = qcbm::sample_shots(model, shots, seed);

    fs::path out_dir = out;
    fs::create_directories(out_dir);
    std::ofstream csv(out_dir / "counts.csv");
    csv << "index,count\n";
    for (const auto& [index, count] : counts.counts) csv << index << "," << count << "\n";

    if (cp.meta.contains("image_height")) {
        int height = cp.meta.at("image_height").get<int>();
        int width = cp.meta.at("image_width").get<int>();
        double norm = cp.meta.value("norm_constant", cp.meta.value("norm", 1.0));
        qcbm::ProbabilityVector empirical;
        empirical.num_qubits = model.num_qubits;
        empirical.mass.assign(model.mass.size(), 0.0);
        for (const auto& [index, count] : counts.counts)
            empirical.mass[index] = static_cast<double>(count) / static_cast<double>(shots);
        qcbm::save_image(qcbm::distribution_to_image(empirical, height, width, norm),
                         (out_dir / "empirical.pgm").string());
    }
    std::cout << "sampled " << shots << " shots into " << counts.counts.size()
              << " distinct outcomes; artifacts in " << out_dir.string() << "\n";
    return 0;
}

int cmd_analyze(const std::vector<std::string>& checkpoint_paths, std::vector<int> qubits,
                std::uint64_t shots, int trials, double percentile, std::uint64_t seed,
                int top_bits, const std::string& out) {
    struct Row {
        std::string path;
        int two_qubit_gates = 0;
        qcbm::MarginalSet marginals;
        double l1 = 0, baseline = 0, floor = 0;
    };
    std::vector<Row> rows;
    for (const std::string& path : checkpoint_paths) {
        Checkpoint cp = read_checkpoint(path);
        qcbm::ProbabilityVector model = checkpoint_distribution(cp);
        std::vector<int> subset = qubits;
        if (subset.empty())
            for (int q = 0; q < std::min(4, model.num_qubits); ++q) subset.push_back(q);
        Row row;
        row.path = path;
        row.two_qubit_gates = qcbm::count_two_qubit_gates(cp.circuit);
        row.marginals.qubits = subset;
        row.marginals.ideal = qcbm::exact_marginals(model, subset);
        row.marginals.measured =
            shots > 0
                ? qcbm::empirical_marginals(qcbm::sample_shots(model, shots, seed), subset)
                : row.marginals.ideal;
        row.l1 = qcbm::l1_marginals(row.marginals.measured, row.marginals.ideal);
        row.baseline = qcbm::mixed_baseline_l1(row.marginals.ideal);
        row.floor = qcbm::finite_shot_percentile(row.marginals.ideal, shots > 0 ? shots : 100,
                                                 trials, percentile, seed);
        rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end(),
              [](const Row& a, const Row& b) { return a.two_qubit_gates < b.two_qubit_gates; });

    fs::path out_dir = out;
    fs::create_directories(out_dir);
    std::ofstream csv(out_dir / "analyze.csv");
    csv << "checkpoint,two_qubit_gates,l1,mixed_baseline,percentile_floor\n";
    csv.precision(12);

    std::cout.precision(6);
    for (const Row& row : rows) {
        std::cout << row.path << " (" << row.two_qubit_gates << " two-qubit gates)\n";
        std::cout << "  qubit  measured  ideal  depolarized\n";
        for (std::size_t i = 0; i < row.marginals.qubits.size(); ++i)
            std::cout << "  " << row.marginals.qubits[i] << "  " << row.marginals.measured[i]
                      << "  " << row.marginals.ideal[i] << "  0.5\n";
        std::cout << "  L1 " << row.l1 << "  mixed baseline " << row.baseline << "  "
                  << percentile << "th-percentile floor (" << (shots > 0 ? shots : 100)
                  << " shots) " << row.floor << "\n";
        csv << row.path << "," << row.two_qubit_gates << "," << row.l1 << "," << row.baseline
            << "," << row.floor << "\n";
    }

    qcbm::save_image(qcbm::render_marginal_chart(rows.front().marginals),
                     (out_dir / "marginals.pgm").string());
    if (top_bits > 0) {
        // Joint distribution of the most significant bits, exact vs sampled.
        Checkpoint cp = read_checkpoint(rows.front().path);
        qcbm::ProbabilityVector model = checkpoint_distribution(cp);
        qcbm::ProbabilityVector exact = qcbm::top_bits_histogram(model, top_bits);
        std::ofstream hist(out_dir / "histogram.csv");
        hist << "index,exact" << (shots > 0 ? ",sampled" : "") << "\n";
        hist.precision(12);
        if (shots > 0) {
            qcbm::ProbabilityVector sampled =
                qcbm::top_bits_histogram(qcbm::sample_shots(model, shots, seed), top_bits);
            for (std::size_t i = 0; i < exact.mass.size(); ++i)
                hist << i << "," << exact.mass[i] << "," << sampled.mass[i] << "\n";
        } else {
            for (std::size_t i = 0; i < exact.mass.size(); ++i)
                hist << i << "," << exact.mass[i] << "\n";
        }
    }
    if (rows.size() > 1) {
        std::vector<double> l1s;
        for (const Row& row : rows) l1s.push_back(row.l1);
        std::vector<double> lines{rows.front().baseline, rows.front().floor};
        qcbm::save_image(qcbm::render_value_chart(l1s, lines),
                         (out_dir / "l1_vs_gates.pgm").string());
    }
    return 0;
}

int cmd_export(const std::string& checkpoint_path, const std::string& format,
               const std::string& basis, const std::string& out) {
    Checkpoint cp = read_checkpoint(checkpoint_path);
    qcbm::ParameterizedCircuit circuit = cp.circuit;
    if (basis == "cnot")
        circuit = qcbm::compile_to_basis(circuit, qcbm::GateBasis::CnotNative);
    else if (basis != "rzz")
        throw ConfigError("unsupported basis: " + basis);
    qcbm::ExportFormat fmt;
    if (format == "qasm")
        fmt = qcbm::ExportFormat::Qasm2;
    else if (format == "json")
        fmt = qcbm::ExportFormat::Json;
    else
        throw ConfigError("unsupported format: " + format);
    std::string text = qcbm::export_circuit(circuit, cp.params, fmt);
    if (out.empty()) {
        std::cout << text;
    } else {
        std::ofstream file(out);
        file << text;
        if (!file) throw std::runtime_error("cannot write " + out);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum circuit image loader: hierarchical training, block encoding, "
                 "reconstruction and coarse-grained verification"};
    app.require_subcommand(1);

    std::string config_path, image_flag;
    std::uint64_t seed_flag = 0;

    const char* config_footer =
        "Config file keys (all optional; flags win): image, output_dir, seed (1), threads (1),\n"
        "max_qubits (24), flat (false), flat_layers (4), block_param (2), parallel (1), pad (true),\n"
        "schedule.{layers, layers_per_stage (2), two_qubit_budget, param_budget, iterations,\n"
        "total_iterations (400)}, optimizer.{learning_rate (0.01), beta1 (0.9), beta2 (0.999),\n"
        "epsilon (1e-8), kl_clamp (1e-12)}";

    // train
    auto* train = app.add_subcommand("train", "train a circuit to load one image");
    train->footer(config_footer);
    std::string train_out;
    bool flat = false;
    int total_iterations = -1, layers_per_stage = -1, two_qubit_budget = -1, param_budget = -1;
    int threads = -1, flat_layers = -1;
    double learning_rate = 0.0;
    train->add_option("-c,--config", config_path, "JSON config file (flags override it)");
    train->add_option("-i,--image", image_flag, "input image (PGM P2/P5)");
    train->add_option("-o,--output-dir", train_out, "artifact directory (default: out)");
    train->add_flag("--flat", flat, "train the full register in one stage (no hierarchy)");
    train->add_option("--iterations", total_iterations,
                      "total iterations, split across stages by active register size "
                      "(default: 400)");
    train->add_option("--layers-per-stage", layers_per_stage,
                      "rotation+entangler layers added per stage (default: 2)");
    train->add_option("--two-qubit-budget", two_qubit_budget,
                      "choose per-stage layers to fit this RZZ budget exactly");
    train->add_option("--param-budget", param_budget,
                      "choose per-stage layers to fit this parameter budget");
    train->add_option("--flat-layers", flat_layers, "layers for --flat mode (default: 4)");
    train->add_option("--learning-rate", learning_rate, "Adam learning rate (default: 0.01)");
    train->add_option("--seed", seed_flag, "RNG seed (default: 1)");
    train->add_option("--threads", threads, "statevector worker threads (default: 1)");

    // train-bae
    auto* bae = app.add_subcommand("train-bae", "train each image block on its own register");
    bae->footer(config_footer);
    std::string bae_out;
    int block_param = -1, parallel = -1;
    bae->add_option("-c,--config", config_path, "JSON config file (flags override it)");
    bae->add_option("-i,--image", image_flag, "input image (PGM P2/P5)");
    bae->add_option("-o,--output-dir", bae_out, "artifact directory (default: out)");
    bae->add_option("-b,--block-param", block_param,
                    "block parameter: 2b^2 square tiles, 0 = whole image (default: 2)");
    bae->add_option("--parallel", parallel, "blocks trained concurrently (default: 1)");
    bae->add_option("--iterations", total_iterations,
                    "total iterations per block (default: 400)");
    bae->add_option("--layers-per-stage", layers_per_stage,
                    "layers per stage inside each block (default: 2)");
    bae->add_option("--learning-rate", learning_rate, "Adam learning rate (default: 0.01)");
    bae->add_option("--seed", seed_flag, "RNG seed (default: 1)");
    bae->add_option("--threads", threads, "statevector worker threads (default: 1)");

    // metrics
    auto* metrics = app.add_subcommand("metrics", "compare a checkpoint against an image");
    std::string metrics_checkpoint, metrics_image;
    std::vector<int> resolutions;
    metrics->add_option("checkpoint", metrics_checkpoint, "circuit checkpoint (JSON)")
        ->required();
    metrics->add_option("-i,--image", metrics_image, "target image (PGM)")->required();
    metrics->add_option("-m,--resolution", resolutions,
                        "qubit resolutions to report at (default: full)");

    // sample
    auto* sample = app.add_subcommand("sample", "draw measurement shots from a checkpoint");
    std::string sample_checkpoint, sample_out = "out";
    std::uint64_t shots = 0;
    sample->add_option("checkpoint", sample_checkpoint, "circuit checkpoint (JSON)")->required();
    sample->add_option("-s,--shots", shots, "number of shots (must be >= 1)")->required();
    sample->add_option("--seed", seed_flag, "sampler seed (default: 1)");
    sample->add_option("-o,--output-dir", sample_out, "artifact directory (default: out)");

    // analyze
    auto* analyze =
        app.add_subcommand("analyze", "coarse-grained marginal statistics and noise floors");
    std::vector<std::string> analyze_checkpoints;
    std::vector<int> subset;
    std::uint64_t analyze_shots = 0;
    int trials = 10000;
    double percentile = 99.0;
    std::string analyze_out = "out";
    analyze->add_option("checkpoints", analyze_checkpoints, "checkpoints, one row each")
        ->required();
    analyze->add_option("-q,--qubits", subset,
                        "qubit subset S (default: four most significant)");
    int top_bits = 0;
    analyze->add_option("--top-bits", top_bits,
                        "also write histogram.csv over the K most significant bits "
                        "(default: off)");
    analyze->add_option("-s,--shots", analyze_shots,
                        "simulated shots for the measured side (0 = exact, default)");
    analyze->add_option("--trials", trials,
                        "Monte Carlo trials for the mixed-state floor (default: 10000)");
    analyze->add_option("--percentile", percentile,
                        "floor percentile: the L1 level this share of maximally mixed "
                        "experiments stays above (default: 99)");
    analyze->add_option("--seed", seed_flag, "Monte Carlo seed (default: 1)");
    analyze->add_option("-o,--output-dir", analyze_out, "artifact directory (default: out)");

    // export
    auto* exp = app.add_subcommand("export", "write a checkpoint as text");
    std::string export_checkpoint, export_format = "qasm", export_basis = "rzz", export_out;
    exp->add_option("checkpoint", export_checkpoint, "circuit checkpoint (JSON)")->required();
    exp->add_option("-f,--format", export_format, "qasm | json (default: qasm)");
    exp->add_option("--basis", export_basis,
                    "rzz (native) | cnot (rewrite each RZZ as CNOT RZ CNOT) (default: rzz)");
    exp->add_option("-o,--output", export_out, "output file (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        json config = load_config(config_path);
        // Flags override file values.
        bool seed_set = train->count("--seed") + bae->count("--seed") +
                            sample->count("--seed") + analyze->count("--seed") >
                        0;
        if (!image_flag.empty()) config["image"] = image_flag;
        if (seed_set) config["seed"] = seed_flag;
        if (threads > 0) config["threads"] = threads;
        if (learning_rate > 0) config["optimizer"]["learning_rate"] = learning_rate;
        if (total_iterations >= 0) config["schedule"]["total_iterations"] = total_iterations;
        if (layers_per_stage >= 0) config["schedule"]["layers_per_stage"] = layers_per_stage;
        if (two_qubit_budget >= 0) config["schedule"]["two_qubit_budget"] = two_qubit_budget;
        if (param_budget >= 0) config["schedule"]["param_budget"] = param_budget;
        if (flat_layers >= 0) config["flat_layers"] = flat_layers;
        if (block_param >= 0) config["block_param"] = block_param;
        if (parallel > 0) config["parallel"] = parallel;
        if (flat) config["flat"] = true;

        std::uint64_t seed = config_get<std::uint64_t>(config, "", "seed", 1);

        if (*train) {
            if (!train_out.empty()) config["output_dir"] = train_out;
            try {
                return cmd_train(config);
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                std::cerr << "error while training: " << e.what() << "\n";
                return 2;
            }
        }
        if (*bae) {
            if (!bae_out.empty()) config["output_dir"] = bae_out;
            try {
                return cmd_train_bae(config);
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                std::cerr << "error while training blocks: " << e.what() << "\n";
                return 2;
            }
        }
        if (*metrics) return cmd_metrics(metrics_checkpoint, metrics_image, resolutions);
        if (*sample) {
            if (shots < 1) throw ConfigError("--shots must be >= 1");
            return cmd_sample(sample_checkpoint, shots, seed, sample_out);
        }
        if (*analyze)
            return cmd_analyze(analyze_checkpoints, subset, analyze_shots, trials, percentile,
                               seed, top_bits, analyze_out);
        if (*exp) return cmd_export(export_checkpoint, export_format, export_basis, export_out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
