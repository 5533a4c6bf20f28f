#include "tabsynth/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "tabsynth/error.hpp"

namespace tabsynth {

namespace {

[[noreturn]] void config_error(const std::string& message) {
    throw Error(ErrorKind::config, message);
}

// Typed access to one JSON object that remembers which keys were read, so
// leftovers can be reported as unknown.
class Section {
public:
    Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) {
            config_error(path_ + " must be an object");
        }
    }

    ~Section() noexcept(false) {
        if (std::uncaught_exceptions() > 0) {
            return;
        }
        for (const auto& [key, value] : j_.items()) {
            if (used_.count(key) == 0) {
                config_error("unknown key '" + key + "' in " + path_);
            }
        }
    }

    template <class T>
    void get(const char* key, T& out) {
        used_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end() || it->is_null()) {
            return;
        }
        try {
            out = it->template get<T>();
        } catch (const nlohmann::json::exception&) {
            config_error(path_ + "." + key + " has the wrong type");
        }
    }

    template <class T>
    void get(const char* key, std::optional<T>& out) {
        T value{};
        used_.insert(key);
        if (!has(key)) {
            return;
        }
        get(key, value);
        out = std::move(value);
    }

    bool has(const char* key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    const nlohmann::json& child(const char* key) {
        used_.insert(key);
        return j_.at(key);
    }

    std::string path(const char* key) const { return path_ + "." + key; }

private:
    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> used_;
};

void read_version(Section& s) {
    int version = kConfigVersion;
    s.get("format_version", version);
    if (version != kConfigVersion) {
        throw Error(ErrorKind::version, "config format version " + std::to_string(version) +
                                            " is not supported (expected " + std::to_string(kConfigVersion) + ")");
    }
}

DatasetEntry read_entry(const nlohmann::json& j, const std::string& where, const std::filesystem::path& baseDir) {
    Section s(j, where);
    DatasetEntry e;
    std::string path;
    std::string task = "classification";
    s.get("name", e.name);
    s.get("path", path);
    s.get("label", e.label);
    s.get("task", task);
    s.get("split_seed", e.splitSeed);
    s.get("train_fraction", e.trainFraction);
    if (path.empty()) {
        config_error(where + ".path is required");
    }
    e.path = std::filesystem::path(path).is_absolute() ? std::filesystem::path(path) : baseDir / path;
    if (e.name.empty()) {
        e.name = std::filesystem::path(path).stem().string();
    }
    try {
        e.task = parse_task(task);
    } catch (const Error& err) {
        config_error(where + ".task: " + err.what());
    }
    if (!(e.trainFraction > 0.0 && e.trainFraction < 1.0)) {
        config_error(where + ".train_fraction must be in (0, 1)");
    }
    return e;
}

}  // namespace

Table DatasetEntry::load() const {
    LoadOptions opts;
    opts.labelColumn = label;
    opts.task = task;
    Table t = load_csv(path, opts);
    t.sourceId = name;
    return t;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

nlohmann::json parse_json(const std::string& text, const std::string& what) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        config_error(what + " is not valid JSON: " + e.what());
    }
}

Manifest Manifest::from_json(const nlohmann::json& j, const std::filesystem::path& baseDir) {
    Manifest m;
    Section s(j, "manifest");
    read_version(s);
    if (s.has("datasets")) {
        const auto& arr = s.child("datasets");
        if (!arr.is_array()) {
            config_error("manifest.datasets must be an array");
        }
        for (std::size_t i = 0; i < arr.size(); ++i) {
            m.datasets.push_back(read_entry(arr[i], "manifest.datasets[" + std::to_string(i) + "]", baseDir));
        }
    }
    if (s.has("pretrain")) {
        const auto& arr = s.child("pretrain");
        if (!arr.is_array()) {
            config_error("manifest.pretrain must be an array");
        }
        for (std::size_t i = 0; i < arr.size(); ++i) {
            m.pretrain.push_back(read_entry(arr[i], "manifest.pretrain[" + std::to_string(i) + "]", baseDir));
        }
    }
    return m;
}

Manifest Manifest::load(const std::filesystem::path& path) {
    const auto j = parse_json(read_text_file(path), "manifest '" + path.string() + "'");
    return from_json(j, path.parent_path());
}

const DatasetEntry& Manifest::dataset(const std::string& name) const {
    if (name.empty()) {
        if (datasets.empty()) {
            throw Error(ErrorKind::config, "manifest lists no datasets");
        }
        return datasets.front();
    }
    for (const auto& d : datasets) {
        if (d.name == name) {
            return d;
        }
    }
    throw Error(ErrorKind::config, "manifest has no dataset named '" + name + "'");
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j;
    j["format_version"] = kConfigVersion;
    j["backend"] = {
        {"kind", backend.kind},
        {"ngram", {{"order", backend.ngram.order}, {"add_k", backend.ngram.addK},
                   {"finetune_weight", backend.ngram.finetuneWeight}}},
        {"neural", {{"dim", backend.neural.dim}, {"context", backend.neural.context},
                    {"layers", backend.neural.layers}, {"hidden", backend.neural.hidden},
                    {"learning_rate", backend.neural.learningRate}, {"batch_size", backend.neural.batchSize},
                    {"init_scale", backend.neural.initScale}, {"clip_norm", backend.neural.clipNorm}}},
        {"pretrain_epochs", backend.pretrainEpochs},
        {"finetune_steps", backend.finetuneSteps},
        {"permutations_per_row", backend.permutationsPerRow},
        {"pretrain_seed", backend.pretrainSeed},
    };
    j["backbone"] = {
        {"kind", backbone.kind},
        {"cart", {{"max_depth", backbone.cart.maxDepth}, {"min_leaf", backbone.cart.minLeaf}}},
        {"knn", {{"k", backbone.knn.k}}},
        {"upweight", backbone.upweight},
    };
    j["sampling"] = {
        {"temperature", sampling.temperature},
        {"max_tokens", sampling.maxTokens},
        {"max_attempts", sampling.maxAttemptsPerRow},
        {"clamp", sampling.categoricalClamp},
        {"constrained", sampling.constrained},
        {"label_first", labelFirst},
    };
    j["codec"] = {
        {"character_numbers", codec.useCharacterNumbers},
        {"real_names", codec.useRealFeatureNames},
        {"include_label", codec.includeLabel},
        {"separator", codec.clauseSeparator},
    };
    j["seeds"] = seeds;
    j["imputation"] = {
        {"mechanism", std::string(to_string(mechanism))},
        {"miss_ratio", missRatio},
        {"anchor", anchorColumn ? nlohmann::json(*anchorColumn) : nlohmann::json(nullptr)},
    };
    j["imbalance"] = {{"ratio", imbalanceRatio}};
    j["synthetic_rows"] = syntheticRows;
    j["coverage_k"] = coverageK;
    return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig c;
    Section root(j, "config");
    read_version(root);
    if (root.has("backend")) {
        Section s(root.child("backend"), "config.backend");
        s.get("kind", c.backend.kind);
        if (s.has("ngram")) {
            Section n(s.child("ngram"), "config.backend.ngram");
            n.get("order", c.backend.ngram.order);
            n.get("add_k", c.backend.ngram.addK);
            n.get("finetune_weight", c.backend.ngram.finetuneWeight);
        }
        if (s.has("neural")) {
            Section n(s.child("neural"), "config.backend.neural");
            n.get("dim", c.backend.neural.dim);
            n.get("context", c.backend.neural.context);
            n.get("layers", c.backend.neural.layers);
            n.get("hidden", c.backend.neural.hidden);
            n.get("learning_rate", c.backend.neural.learningRate);
            n.get("batch_size", c.backend.neural.batchSize);
            n.get("init_scale", c.backend.neural.initScale);
            n.get("clip_norm", c.backend.neural.clipNorm);
        }
        s.get("pretrain_epochs", c.backend.pretrainEpochs);
        s.get("finetune_steps", c.backend.finetuneSteps);
        s.get("permutations_per_row", c.backend.permutationsPerRow);
        s.get("pretrain_seed", c.backend.pretrainSeed);
    }
    if (root.has("backbone")) {
        Section s(root.child("backbone"), "config.backbone");
        s.get("kind", c.backbone.kind);
        if (s.has("cart")) {
            Section n(s.child("cart"), "config.backbone.cart");
            n.get("max_depth", c.backbone.cart.maxDepth);
            n.get("min_leaf", c.backbone.cart.minLeaf);
        }
        if (s.has("knn")) {
            Section n(s.child("knn"), "config.backbone.knn");
            n.get("k", c.backbone.knn.k);
        }
        s.get("upweight", c.backbone.upweight);
    }
    if (root.has("sampling")) {
        Section s(root.child("sampling"), "config.sampling");
        s.get("temperature", c.sampling.temperature);
        s.get("max_tokens", c.sampling.maxTokens);
        s.get("max_attempts", c.sampling.maxAttemptsPerRow);
        s.get("clamp", c.sampling.categoricalClamp);
        s.get("constrained", c.sampling.constrained);
        s.get("label_first", c.labelFirst);
    }
    if (root.has("codec")) {
        Section s(root.child("codec"), "config.codec");
        s.get("character_numbers", c.codec.useCharacterNumbers);
        s.get("real_names", c.codec.useRealFeatureNames);
        s.get("include_label", c.codec.includeLabel);
        s.get("separator", c.codec.clauseSeparator);
    }
    root.get("seeds", c.seeds);
    if (root.has("imputation")) {
        Section s(root.child("imputation"), "config.imputation");
        std::string mech(to_string(c.mechanism));
        s.get("mechanism", mech);
        try {
            c.mechanism = parse_mechanism(mech);
        } catch (const Error& e) {
            config_error(std::string("config.imputation.mechanism: ") + e.what());
        }
        s.get("miss_ratio", c.missRatio);
        s.get("anchor", c.anchorColumn);
    }
    if (root.has("imbalance")) {
        Section s(root.child("imbalance"), "config.imbalance");
        s.get("ratio", c.imbalanceRatio);
    }
    root.get("synthetic_rows", c.syntheticRows);
    root.get("coverage_k", c.coverageK);
    c.validate();
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    return from_json(parse_json(read_text_file(path), "config '" + path.string() + "'"));
}

void RunConfig::validate() const {
    if (seeds.empty()) {
        config_error("at least one seed is required");
    }
    const auto& b = backend.kind;
    if (b != "ngram" && b != "neural" && !(b.rfind("plugin:", 0) == 0 && b.size() > 7)) {
        config_error("unknown backend '" + b + "' (expected ngram, neural or plugin:<cmd>)");
    }
    const auto& f = backbone.kind;
    if (f != "cart" && f != "knn" && !(f.rfind("plugin:", 0) == 0 && f.size() > 7)) {
        config_error("unknown backbone '" + f + "' (expected cart, knn or plugin:<cmd>)");
    }
    if (backend.pretrainEpochs < 0 || backend.finetuneSteps < 0 || backend.permutationsPerRow < 1) {
        config_error("pretrain_epochs and finetune_steps must be >= 0, permutations_per_row >= 1");
    }
    if (backbone.upweight < 1) {
        config_error("backbone upweight must be at least 1");
    }
    if (!(missRatio > 0.0 && missRatio < 1.0)) {
        config_error("miss_ratio must be in (0, 1)");
    }
    if (imbalanceRatio < 1) {
        config_error("imbalance ratio must be at least 1");
    }
    if (syntheticRows < -1) {
        config_error("synthetic_rows must be -1 (match the training table) or >= 0");
    }
    if (codec.clauseSeparator.empty()) {
        config_error("clause separator must not be empty");
    }
    try {
        sampling.validate();
    } catch (const Error& e) {
        config_error(e.what());
    }
}

}  // namespace tabsynth
