#include "osmargin/config.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace osm {

namespace {

std::string trim(std::string_view s) {
    size_t b = 0;
    size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

[[noreturn]] void bad_value(const std::string& section, const std::string& key, const std::string& value,
                            const std::string& want) {
    throw ConfigError("[" + section + "] " + key + ": cannot parse '" + value + "' as " + want);
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::stringstream stream(value);
    std::string item;
    while (std::getline(stream, item, ',')) {
        item = trim(item);
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

DataSource parse_source(const std::string& name) {
    if (name == "blobs") return DataSource::blobs;
    if (name == "rings") return DataSource::rings;
    if (name == "ocr-seq") return DataSource::ocr_seq;
    if (name == "csv") return DataSource::csv;
    throw ConfigError("[data] source: unknown dataset '" + name + "' (expected blobs|rings|ocr-seq|csv)");
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_text(buffer.str(), path);
}

ConfigFile ConfigFile::parse_text(const std::string& text, const std::string& origin) {
    ConfigFile file;
    std::stringstream stream(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(stream, line)) {
        ++line_no;
        const size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string trimmed = trim(line);
        if (trimmed.empty()) continue;
        if (trimmed.front() == '[') {
            if (trimmed.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(line_no) + ": unterminated section header");
            section = trim(std::string_view(trimmed).substr(1, trimmed.size() - 2));
            continue;
        }
        const size_t eq = trimmed.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected 'key = value', got '" + trimmed +
                              "'");
        Entry entry;
        entry.section = section;
        entry.key = trim(std::string_view(trimmed).substr(0, eq));
        entry.value = trim(std::string_view(trimmed).substr(eq + 1));
        entry.line = line_no;
        if (entry.key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
        file.entries_.push_back(std::move(entry));
    }
    return file;
}

std::optional<std::string> ConfigFile::get(const std::string& section, const std::string& key) const {
    // Last occurrence wins, matching shell-style override expectations.
    std::optional<std::string> found;
    for (const auto& entry : entries_)
        if (entry.section == section && entry.key == key) found = entry.value;
    return found;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
    return get(section, key).value_or(fallback);
}

double ConfigFile::get_double(const std::string& section, const std::string& key, double fallback) const {
    const auto raw = get(section, key);
    if (!raw) return fallback;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(raw->data(), raw->data() + raw->size(), v);
    if (ec != std::errc{} || ptr != raw->data() + raw->size()) bad_value(section, key, *raw, "a number");
    return v;
}

int ConfigFile::get_int(const std::string& section, const std::string& key, int fallback) const {
    const auto raw = get(section, key);
    if (!raw) return fallback;
    int v = 0;
    auto [ptr, ec] = std::from_chars(raw->data(), raw->data() + raw->size(), v);
    if (ec != std::errc{} || ptr != raw->data() + raw->size()) bad_value(section, key, *raw, "an integer");
    return v;
}

uint64_t ConfigFile::get_u64(const std::string& section, const std::string& key, uint64_t fallback) const {
    const auto raw = get(section, key);
    if (!raw) return fallback;
    uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(raw->data(), raw->data() + raw->size(), v);
    if (ec != std::errc{} || ptr != raw->data() + raw->size()) bad_value(section, key, *raw, "an unsigned integer");
    return v;
}

std::vector<double> ConfigFile::get_double_list(const std::string& section, const std::string& key) const {
    const auto raw = get(section, key);
    if (!raw) return {};
    std::vector<double> values;
    for (const auto& item : split_list(*raw)) {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc{} || ptr != item.data() + item.size()) bad_value(section, key, item, "a number list");
        values.push_back(v);
    }
    return values;
}

std::vector<std::string> ConfigFile::get_string_list(const std::string& section, const std::string& key) const {
    const auto raw = get(section, key);
    if (!raw) return {};
    return split_list(*raw);
}

RunConfig build_run_config(const ConfigFile& file, const Overrides& overrides) {
    RunConfig config;

    const std::string task = file.get_string("task", "kind", "classify");
    if (task == "classify") {
        config.task = TaskKind::classify;
    } else if (task == "ocr") {
        config.task = TaskKind::ocr;
    } else {
        throw ConfigError("[task] kind: expected classify|ocr, got '" + task + "'");
    }
    config.out_dir = overrides.out_dir.value_or(file.get_string("task", "out", "out"));

    // --- data ---
    config.data.source = parse_source(
        file.get_string("data", "source", config.task == TaskKind::ocr ? "ocr-seq" : "blobs"));
    config.data.seed = file.get_u64("data", "seed", 1);
    config.data.n_per_class = file.get_int("data", "n_per_class", 200);
    config.data.eval_n_per_class = file.get_int("data", "eval_n_per_class", config.data.n_per_class);
    config.data.classes = file.get_int("data", "classes", 2);
    config.data.dims = file.get_int("data", "dims", 2);
    config.data.spread = file.get_double("data", "spread", 1.0);
    config.data.count = file.get_int("data", "count", 150);
    config.data.eval_count = file.get_int("data", "eval_count", std::max(1, config.data.count / 2));
    config.data.alphabet = file.get_int("data", "alphabet", 5);
    config.data.len_min = file.get_int("data", "len_min", 3);
    config.data.len_max = file.get_int("data", "len_max", 5);
    config.data.repeats = file.get_int("data", "repeats", 2);
    config.data.noise = file.get_double("data", "noise", 0.3);
    config.data.train_path = file.get_string("data", "train_path", "");
    config.data.eval_path = file.get_string("data", "eval_path", "");
    if (config.data.source == DataSource::csv) {
        if (config.data.train_path.empty()) throw ConfigError("[data] train_path: required when source = csv");
        if (!std::filesystem::exists(config.data.train_path))
            throw ConfigError("[data] train_path: file not found: " + config.data.train_path);
        if (!config.data.eval_path.empty() && !std::filesystem::exists(config.data.eval_path))
            throw ConfigError("[data] eval_path: file not found: " + config.data.eval_path);
    }

    // --- model ---
    const std::string model_kind = file.get_string("model", "kind", "linear");
    if (model_kind == "linear") {
        config.model.kind = Model::Kind::linear;
    } else if (model_kind == "mlp") {
        config.model.kind = Model::Kind::mlp;
    } else {
        throw ConfigError("[model] kind: expected linear|mlp, got '" + model_kind + "'");
    }
    config.model.hidden_dim = file.get_int("model", "hidden", 32);
    if (config.model.kind == Model::Kind::mlp && config.model.hidden_dim < 1)
        throw ConfigError("[model] hidden: must be >= 1");

    // --- train ---
    const bool ocr_task = config.task == TaskKind::ocr;
    const std::string default_loss = ocr_task ? "osm-ctc" : "soft-osm";
    config.train.loss = parse_loss_kind(overrides.loss.value_or(file.get_string("train", "loss", default_loss)));
    config.train.epochs = overrides.epochs.value_or(file.get_int("train", "epochs", 300));
    if (config.train.epochs < 0) throw ConfigError("[train] epochs: must be >= 0");
    config.train.batch_size = file.get_int("train", "batch_size", ocr_task ? 60 : 32);
    if (config.train.batch_size < 1) throw ConfigError("[train] batch_size: must be >= 1");
    config.train.seed = overrides.seed.value_or(file.get_u64("train", "seed", 0));
    config.train.hinge_margin = file.get_double("train", "hinge_margin", 1.0);

    // --- optim ---
    const std::string optim_kind = file.get_string("optim", "kind", ocr_task ? "adam" : "sgd");
    if (optim_kind == "sgd") {
        config.train.optimizer.kind = OptimizerConfig::Kind::sgd;
    } else if (optim_kind == "adam") {
        config.train.optimizer.kind = OptimizerConfig::Kind::adam;
    } else {
        throw ConfigError("[optim] kind: expected sgd|adam, got '" + optim_kind + "'");
    }
    config.train.optimizer.initial_lr = file.get_double("optim", "lr", ocr_task ? 0.001 : 0.01);
    if (!(config.train.optimizer.initial_lr > 0)) throw ConfigError("[optim] lr: must be > 0");
    config.train.optimizer.sgd.momentum = file.get_double("optim", "momentum", 0.9);
    config.train.optimizer.sgd.weight_decay = file.get_double("optim", "weight_decay", 0.0005);
    config.train.optimizer.adam.beta1 = file.get_double("optim", "beta1", 0.9);
    config.train.optimizer.adam.beta2 = file.get_double("optim", "beta2", 0.999);
    config.train.optimizer.adam.eps = file.get_double("optim", "eps", 1e-8);
    if (config.train.optimizer.kind == OptimizerConfig::Kind::adam)
        config.train.optimizer.adam.weight_decay = file.get_double("optim", "weight_decay", 0.0);

    // --- schedule --- (plain CTC pairs best with exponential decay; every
    // other loss defaults to cosine warm restarts)
    const std::string default_schedule = config.train.loss == LossKind::ctc ? "exponential" : "cosine";
    config.schedule_pinned = file.get("schedule", "kind").has_value();
    const std::string schedule_kind = file.get_string("schedule", "kind", default_schedule);
    if (schedule_kind == "cosine") {
        config.train.schedule.kind = LrSchedule::Kind::cosine_warm_restart;
    } else if (schedule_kind == "exponential") {
        config.train.schedule.kind = LrSchedule::Kind::exponential_decay;
    } else {
        throw ConfigError("[schedule] kind: expected cosine|exponential, got '" + schedule_kind + "'");
    }
    config.train.schedule.period_epochs = file.get_int("schedule", "period", 100);
    config.train.schedule.warmup_epochs = file.get_int("schedule", "warmup", 5);
    config.train.schedule.min_lr = file.get_double("schedule", "min_lr", 0.0);
    config.train.schedule.decay_rate = file.get_double("schedule", "decay_rate", 0.97);
    try {
        config.train.schedule.validate();
    } catch (const ContractViolation& e) {
        throw ConfigError(std::string("[schedule] ") + e.what());
    }

    // --- osm ---
    config.train.hp.alpha = file.get_double("osm", "alpha", ocr_task ? 1.0 : 0.1);
    config.train.hp.lambda = file.get_double("osm", "lambda", 1.0);
    config.train.hp.lambda_max = file.get_double("osm", "lambda_max", 600.0);
    config.train.hp.lambda_min = file.get_double("osm", "lambda_min", 100.0);
    try {
        config.train.hp.validate();
    } catch (const ContractViolation& e) {
        throw ConfigError(std::string("[osm] ") + e.what());
    }

    // --- sweep --- grids kept in file order
    for (const auto& entry : file.entries()) {
        if (entry.section != "sweep") continue;
        if (entry.key != "alpha" && entry.key != "lambda" && entry.key != "lambda_max" && entry.key != "lambda_min")
            throw ConfigError("[sweep] " + entry.key + ": unknown grid (expected alpha|lambda|lambda_max|lambda_min)");
        config.sweep.grids.emplace_back(entry.key, file.get_double_list("sweep", entry.key));
        if (config.sweep.grids.back().second.empty())
            throw ConfigError("[sweep] " + entry.key + ": empty grid");
    }

    // --- compare ---
    for (const auto& name : file.get_string_list("compare", "losses"))
        config.compare.losses.push_back(parse_loss_kind(name));
    if (config.compare.losses.empty())
        config.compare.losses = {LossKind::soft_osm, LossKind::ce, LossKind::hinge};
    for (const auto& name : file.get_string_list("compare", "datasets"))
        config.compare.datasets.push_back(parse_source(name));
    if (config.compare.datasets.empty()) config.compare.datasets = {config.data.source};
    config.compare.repeats = file.get_int("compare", "repeats", 3);
    if (config.compare.repeats < 1) throw ConfigError("[compare] repeats: must be >= 1");

    // --- ocr-compare ---
    config.ocr.hidden_full = file.get_int("ocr", "hidden_full", 16);
    config.ocr.hidden_scaled = file.get_int("ocr", "hidden_scaled", 4);
    if (config.ocr.hidden_full < 1 || config.ocr.hidden_scaled < 1)
        throw ConfigError("[ocr] hidden_full/hidden_scaled: must be >= 1");
    config.ocr.repeats = file.get_int("ocr", "repeats", 3);
    if (config.ocr.repeats < 1) throw ConfigError("[ocr] repeats: must be >= 1");

    return config;
}

std::pair<LabeledDataset, LabeledDataset> build_datasets(const DataSpec& data, DataSource source) {
    switch (source) {
        case DataSource::blobs:
            return {gen_blobs(data.n_per_class, data.classes, data.dims, data.spread, data.seed),
                    gen_blobs(data.eval_n_per_class, data.classes, data.dims, data.spread, data.seed + 1)};
        case DataSource::rings:
            return {gen_rings(data.n_per_class, data.seed), gen_rings(data.eval_n_per_class, data.seed + 1)};
        case DataSource::csv: {
            auto train = load_csv(data.train_path);
            if (data.eval_path.empty()) return {train.dataset, train.dataset};
            auto eval = load_csv(data.eval_path);
            if (eval.dataset.dim() != train.dataset.dim())
                throw ConfigError("[data] eval_path: feature count differs from train_path");
            // Align eval labels to the training remap so class indices agree.
            for (auto& label : eval.dataset.labels) {
                const long long raw = eval.label_map[label];
                int mapped = -1;
                for (size_t k = 0; k < train.label_map.size(); ++k)
                    if (train.label_map[k] == raw) mapped = static_cast<int>(k);
                if (mapped == -1)
                    throw ConfigError("[data] eval_path: label " + std::to_string(raw) + " never seen in training data");
                label = mapped;
            }
            eval.dataset.class_count = train.dataset.class_count;
            return {train.dataset, eval.dataset};
        }
        case DataSource::ocr_seq:
            throw ConfigError("[data] source: ocr-seq is a sequence dataset; use an ocr task");
    }
    throw ConfigError("[data] source: unknown");
}

std::pair<SequenceDataset, SequenceDataset> build_sequence_datasets(const DataSpec& data) {
    return {gen_ocr_sequences(data.count, data.alphabet, data.len_min, data.len_max, data.repeats, data.noise,
                              data.seed),
            gen_ocr_sequences(data.eval_count, data.alphabet, data.len_min, data.len_max, data.repeats, data.noise,
                              data.seed + 1)};
}

}  // namespace osm
