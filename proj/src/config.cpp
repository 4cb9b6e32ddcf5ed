#include "iqsense/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace iqsense {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

int line_at(const std::string &text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

class Reader {
public:
    explicit Reader(const std::string &text) : text_(text) {}

    [[noreturn]] void fail(const std::vector<std::string> &path, const std::string &message) const {
        std::string pointer;
        for (const auto &p : path) {
            pointer += "/" + p;
        }
        if (pointer.empty()) {
            pointer = "/";
        }
        const int line = locate(path);
        throw ConfigError("config:" + std::to_string(line) + ": " + pointer + ": " + message, line);
    }

    void only_keys(const json &obj, const std::vector<std::string> &path,
                   std::initializer_list<std::string_view> allowed) const {
        if (!obj.is_object()) {
            fail(path, "expected an object");
        }
        for (const auto &[key, value] : obj.items()) {
            if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
                auto p = path;
                p.push_back(key);
                fail(p, "unknown key");
            }
        }
    }

    double number(const json &obj, const std::vector<std::string> &path, const std::string &key,
                  double fallback) const {
        if (!obj.contains(key)) {
            return fallback;
        }
        return as_number(obj.at(key), child(path, key));
    }

    double as_number(const json &v, const std::vector<std::string> &path) const {
        if (v.is_string()) {
            const auto s = v.get<std::string>();
            if (s == "-inf") {
                return -std::numeric_limits<double>::infinity();
            }
        }
        if (!v.is_number()) {
            fail(path, "expected a number");
        }
        return v.get<double>();
    }

    std::int64_t integer(const json &obj, const std::vector<std::string> &path,
                         const std::string &key, std::int64_t fallback) const {
        if (!obj.contains(key)) {
            return fallback;
        }
        const json &v = obj.at(key);
        if (!v.is_number_integer()) {
            fail(child(path, key), "expected an integer");
        }
        return v.get<std::int64_t>();
    }

    std::uint64_t count(const json &obj, const std::vector<std::string> &path,
                        const std::string &key, std::uint64_t fallback) const {
        if (!obj.contains(key)) {
            return fallback;
        }
        const json &v = obj.at(key);
        if (v.is_number_float()) {
            const double d = v.get<double>();
            if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) {
                return static_cast<std::uint64_t>(d);
            }
        }
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
            fail(child(path, key), "expected a nonnegative integer");
        }
        return v.get<std::uint64_t>();
    }

    bool boolean(const json &obj, const std::vector<std::string> &path, const std::string &key,
                 bool fallback) const {
        if (!obj.contains(key)) {
            return fallback;
        }
        if (!obj.at(key).is_boolean()) {
            fail(child(path, key), "expected true or false");
        }
        return obj.at(key).get<bool>();
    }

    std::string string(const json &obj, const std::vector<std::string> &path,
                       const std::string &key, const std::string &fallback) const {
        if (!obj.contains(key)) {
            return fallback;
        }
        if (!obj.at(key).is_string()) {
            fail(child(path, key), "expected a string");
        }
        return obj.at(key).get<std::string>();
    }

    std::vector<double> numbers(const json &obj, const std::vector<std::string> &path,
                                const std::string &key) const {
        std::vector<double> out;
        if (!obj.contains(key)) {
            return out;
        }
        const auto p = child(path, key);
        if (!obj.at(key).is_array()) {
            fail(p, "expected an array of numbers");
        }
        std::size_t i = 0;
        for (const json &v : obj.at(key)) {
            out.push_back(as_number(v, child(p, std::to_string(i++))));
        }
        return out;
    }

    static std::vector<std::string> child(std::vector<std::string> path, const std::string &key) {
        path.push_back(key);
        return path;
    }

private:
    // Best-effort source line for a path: follows the quoted keys in order.
    int locate(const std::vector<std::string> &path) const {
        std::size_t pos = 0;
        for (const auto &key : path) {
            if (!key.empty() && std::all_of(key.begin(), key.end(), ::isdigit)) {
                continue;
            }
            const std::size_t found = text_.find("\"" + key + "\"", pos);
            if (found == std::string::npos) {
                break;
            }
            pos = found;
        }
        return line_at(text_, pos);
    }

    const std::string &text_;
};

using Path = std::vector<std::string>;

MismatchSpec read_mismatch(const Reader &r, const json &v, const Path &path) {
    if (v.is_string()) {
        if (v.get<std::string>() == "ideal") {
            return {MismatchSpec::Ideal{}};
        }
        r.fail(path, "expected \"ideal\" or an object");
    }
    if (!v.is_object()) {
        r.fail(path, "expected \"ideal\" or an object");
    }
    if (v.contains("irr_db")) {
        r.only_keys(v, path, {"irr_db"});
        const double db = r.as_number(v.at("irr_db"), Reader::child(path, "irr_db"));
        if (!(db < 0.0)) {
            r.fail(Reader::child(path, "irr_db"), "IRR must be negative (dB)");
        }
        return {MismatchSpec::Irr{db}};
    }
    r.only_keys(v, path, {"epsilon", "theta"});
    MismatchSpec::Explicit e{r.number(v, path, "epsilon", 0.0), r.number(v, path, "theta", 0.0)};
    try {
        (void)IqMismatch(e.epsilon, e.theta);
    } catch (const std::invalid_argument &ex) {
        r.fail(path, ex.what());
    }
    return {e};
}

ordered_json write_mismatch(const MismatchSpec &m) {
    return std::visit(
        [](const auto &form) -> ordered_json {
            using T = std::decay_t<decltype(form)>;
            if constexpr (std::is_same_v<T, MismatchSpec::Ideal>) {
                return "ideal";
            } else if constexpr (std::is_same_v<T, MismatchSpec::Irr>) {
                ordered_json j;
                j["irr_db"] = form.db;
                return j;
            } else {
                ordered_json j;
                j["epsilon"] = form.epsilon;
                j["theta"] = form.theta;
                return j;
            }
        },
        m.form);
}

ordered_json number_json(double v) {
    if (std::isinf(v) && v < 0) {
        return "-inf";
    }
    return v;
}

ordered_json numbers_json(const std::vector<double> &values) {
    ordered_json arr = ordered_json::array();
    for (double v : values) {
        arr.push_back(number_json(v));
    }
    return arr;
}

SweepAxis parse_axis(const Reader &r, const std::string &s, const Path &path) {
    for (SweepAxis a : {SweepAxis::IrrDb, SweepAxis::DeltaSnrDb, SweepAxis::Snr1Db}) {
        if (axis_name(a) == s) {
            return a;
        }
    }
    r.fail(path, "unknown sweep axis '" + s + "' (irr_db, delta_snr_db, snr1_db)");
}

void require(bool ok, const Reader &r, const Path &path, const std::string &message) {
    if (!ok) {
        r.fail(path, message);
    }
}

} // namespace

IqMismatch MismatchSpec::resolve() const {
    return std::visit(
        [](const auto &f) -> IqMismatch {
            using T = std::decay_t<decltype(f)>;
            if constexpr (std::is_same_v<T, Ideal>) {
                return IqMismatch::ideal();
            } else if constexpr (std::is_same_v<T, Irr>) {
                return irr_to_mismatch(f.db);
            } else {
                return IqMismatch(f.epsilon, f.theta);
            }
        },
        form);
}

OutageScenario OutageConfig::scenario() const {
    OutageScenario sc{p_mk, p0, std::norm(mismatch_coefficients(sec_mismatch.resolve()).beta),
                      noise_p, var_g, var_h, rate_p};
    sc.validate();
    return sc;
}

OutageScenario OutageConfig::scenario_at_irr(double irr_db) const {
    OutageConfig c = *this;
    c.sec_mismatch = irr_db == -std::numeric_limits<double>::infinity()
                         ? MismatchSpec{MismatchSpec::Ideal{}}
                         : MismatchSpec{MismatchSpec::Irr{irr_db}};
    return c.scenario();
}

SensingScenario ExperimentConfig::scenario() const {
    SensingScenario sc;
    sc.pair.psk_order = psk_order;
    sc.pair.noise_var = noise_var;
    sc.pair.channel_var = channel_var;
    sc.pair.channel_var_mirror = channel_var_mirror;
    sc.tx_mismatch = tx_mismatch.resolve();
    if (rx_mismatch) {
        sc.rx_mismatch = rx_mismatch->resolve();
    }
    sc.n_packets = GammaShape(n_packets);
    sc.mode = mode;
    sc.snr1_db = snr1_db;
    sc.snr2_db = snr2_db;
    sc.block_fading = block_fading;
    sc.merge_tol = merge_tol;
    sc.apply_snr();
    sc.validate();
    return sc;
}

DetectorMode parse_mode(const std::string &tag, double cfar_pfa) {
    if (tag == "four") {
        return DetectorMode::four_level();
    }
    if (tag == "two-bayes") {
        return DetectorMode::two_level_bayes();
    }
    if (tag == "two-cfar") {
        return DetectorMode::two_level_cfar(cfar_pfa);
    }
    throw std::invalid_argument("unknown detector mode '" + tag + "' (four, two-bayes, two-cfar)");
}

ExperimentConfig parse_config(const std::string &text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error &e) {
        const int line = line_at(text, e.byte == 0 ? 0 : e.byte - 1);
        throw ConfigError("config:" + std::to_string(line) + ": malformed JSON: " + e.what(), line);
    }
    const Reader r(text);
    const Path top;
    r.only_keys(root, top,
                {"psk_order", "noise_var", "channel_var", "channel_var_mirror", "snr1_db",
                 "snr2_db", "n_packets", "tx_mismatch", "rx_mismatch", "mode", "cfar_pfa",
                 "merge_tol", "block_fading", "trials", "seed", "variance_samples", "sweep",
                 "outage", "frame", "figure", "output"});

    ExperimentConfig cfg;
    cfg.psk_order = static_cast<int>(r.integer(root, top, "psk_order", cfg.psk_order));
    cfg.noise_var = r.number(root, top, "noise_var", cfg.noise_var);
    cfg.channel_var = r.number(root, top, "channel_var", cfg.channel_var);
    cfg.channel_var_mirror = r.number(root, top, "channel_var_mirror", cfg.channel_var_mirror);
    cfg.snr1_db = r.number(root, top, "snr1_db", cfg.snr1_db);
    cfg.snr2_db = r.number(root, top, "snr2_db", cfg.snr2_db);
    cfg.n_packets = r.integer(root, top, "n_packets", cfg.n_packets);
    require(cfg.n_packets >= 1, r, {"n_packets"}, "must be >= 1");
    if (root.contains("tx_mismatch")) {
        cfg.tx_mismatch = read_mismatch(r, root.at("tx_mismatch"), {"tx_mismatch"});
    }
    if (root.contains("rx_mismatch") && !root.at("rx_mismatch").is_null()) {
        cfg.rx_mismatch = read_mismatch(r, root.at("rx_mismatch"), {"rx_mismatch"});
    }
    cfg.cfar_pfa = r.number(root, top, "cfar_pfa", cfg.cfar_pfa);
    require(cfg.cfar_pfa > 0.0 && cfg.cfar_pfa <= 1.0, r, {"cfar_pfa"}, "must be in (0, 1]");
    try {
        cfg.mode = parse_mode(r.string(root, top, "mode", "four"), cfg.cfar_pfa);
    } catch (const std::invalid_argument &e) {
        r.fail({"mode"}, e.what());
    }
    cfg.merge_tol = r.number(root, top, "merge_tol", cfg.merge_tol);
    require(cfg.merge_tol >= 0.0, r, {"merge_tol"}, "must be >= 0");
    cfg.block_fading = r.boolean(root, top, "block_fading", cfg.block_fading);
    cfg.trials = r.count(root, top, "trials", cfg.trials);
    require(cfg.trials >= 1, r, {"trials"}, "must be >= 1");
    cfg.seed = r.count(root, top, "seed", cfg.seed);
    cfg.variance_samples = r.count(root, top, "variance_samples", cfg.variance_samples);
    require(cfg.variance_samples >= 10'000, r, {"variance_samples"}, "must be >= 10000");

    if (root.contains("sweep")) {
        const Path p{"sweep"};
        const json &s = root.at("sweep");
        r.only_keys(s, p, {"axis", "grid", "modes", "rx_follows_tx", "lock_delta_snr_db"});
        SweepConfig sw;
        sw.axis = parse_axis(r, r.string(s, p, "axis", "irr_db"), Reader::child(p, "axis"));
        sw.grid = r.numbers(s, p, "grid");
        require(!sw.grid.empty(), r, Reader::child(p, "grid"), "grid must be a nonempty array");
        if (s.contains("modes")) {
            const Path mp = Reader::child(p, "modes");
            require(s.at("modes").is_array() && !s.at("modes").empty(), r, mp,
                    "expected a nonempty array of mode names");
            sw.modes.clear();
            for (const json &m : s.at("modes")) {
                require(m.is_string(), r, mp, "expected mode names");
                try {
                    sw.modes.push_back(parse_mode(m.get<std::string>(), cfg.cfar_pfa));
                } catch (const std::invalid_argument &e) {
                    r.fail(mp, e.what());
                }
            }
        }
        sw.rx_follows_tx = r.boolean(s, p, "rx_follows_tx", false);
        if (s.contains("lock_delta_snr_db") && !s.at("lock_delta_snr_db").is_null()) {
            sw.lock_delta_snr_db = r.number(s, p, "lock_delta_snr_db", 0.0);
        }
        cfg.sweep = sw;
    }

    if (root.contains("outage")) {
        const Path p{"outage"};
        const json &o = root.at("outage");
        r.only_keys(o, p, {"p_mk", "p0", "noise_p", "var_g", "var_h", "rate_p", "sec_mismatch", "irr_grid"});
        OutageConfig oc;
        oc.p_mk = r.number(o, p, "p_mk", oc.p_mk);
        oc.p0 = r.number(o, p, "p0", oc.p0);
        oc.noise_p = r.number(o, p, "noise_p", oc.noise_p);
        oc.var_g = r.number(o, p, "var_g", oc.var_g);
        oc.var_h = r.number(o, p, "var_h", oc.var_h);
        oc.rate_p = r.number(o, p, "rate_p", oc.rate_p);
        if (o.contains("sec_mismatch")) {
            oc.sec_mismatch = read_mismatch(r, o.at("sec_mismatch"), Reader::child(p, "sec_mismatch"));
        }
        oc.irr_grid = r.numbers(o, p, "irr_grid");
        try {
            (void)oc.scenario();
        } catch (const std::invalid_argument &e) {
            r.fail(p, e.what());
        }
        cfg.outage = oc;
    }

    if (root.contains("frame")) {
        const Path p{"frame"};
        const json &f = root.at("frame");
        r.only_keys(f, p, {"subcarriers", "users", "snr_db", "pattern", "activity", "active"});
        FrameConfig fc;
        fc.subcarriers = static_cast<int>(r.integer(f, p, "subcarriers", fc.subcarriers));
        require(fc.subcarriers >= 2 && fc.subcarriers % 2 == 0, r, Reader::child(p, "subcarriers"),
                "must be even and >= 2");
        fc.users = static_cast<int>(r.integer(f, p, "users", fc.users));
        require(fc.users >= 1 && fc.subcarriers % fc.users == 0, r, Reader::child(p, "users"),
                "must divide the subcarrier count");
        fc.snr_db = r.number(f, p, "snr_db", fc.snr_db);
        fc.pattern = r.string(f, p, "pattern", f.contains("active") ? "list" : fc.pattern);
        require(fc.pattern == "random" || fc.pattern == "all-idle" || fc.pattern == "all-busy" ||
                    fc.pattern == "fig2" || fc.pattern == "list",
                r, Reader::child(p, "pattern"),
                "expected random, all-idle, all-busy, fig2 or list");
        fc.activity = r.number(f, p, "activity", fc.activity);
        require(fc.activity >= 0.0 && fc.activity <= 1.0, r, Reader::child(p, "activity"),
                "must be in [0, 1]");
        if (f.contains("active")) {
            const Path ap = Reader::child(p, "active");
            require(f.at("active").is_array(), r, ap, "expected an array of subcarrier indices");
            for (const json &k : f.at("active")) {
                require(k.is_number_integer(), r, ap, "expected integer subcarrier indices");
                const int idx = k.get<int>();
                require(idx != 0, r, ap, "the DC subcarrier (index 0) carries no data");
                require(std::abs(idx) <= fc.subcarriers / 2, r, ap,
                        "subcarrier index outside [-K/2, K/2]");
                fc.active.push_back(idx);
            }
        }
        require(fc.pattern != "list" || f.contains("active"), r, p,
                "pattern 'list' needs an 'active' array");
        cfg.frame = fc;
    }

    if (root.contains("figure")) {
        const Path p{"figure"};
        const json &f = root.at("figure");
        r.only_keys(f, p, {"irr_grid", "snr1_grid", "delta_snr_db"});
        FigureConfig fc;
        fc.irr_grid = r.numbers(f, p, "irr_grid");
        fc.snr1_grid = r.numbers(f, p, "snr1_grid");
        fc.delta_snr_db = r.numbers(f, p, "delta_snr_db");
        cfg.figure = fc;
    }

    if (root.contains("output")) {
        const Path p{"output"};
        const json &o = root.at("output");
        r.only_keys(o, p, {"path", "format"});
        if (o.contains("path")) {
            cfg.output_path = r.string(o, p, "path", "");
        }
        const std::string fmt = r.string(o, p, "format", "csv");
        require(fmt == "csv" || fmt == "json", r, Reader::child(p, "format"), "expected csv or json");
        cfg.output_format = fmt == "json" ? OutputFormat::Json : OutputFormat::Csv;
    }

    try {
        (void)cfg.scenario();
    } catch (const std::exception &e) {
        r.fail(top, e.what());
    }
    return cfg;
}

ExperimentConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config file '" + path + "'");
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

ordered_json to_json(const ExperimentConfig &cfg) {
    ordered_json j;
    j["psk_order"] = cfg.psk_order;
    j["noise_var"] = cfg.noise_var;
    j["channel_var"] = cfg.channel_var;
    j["channel_var_mirror"] = cfg.channel_var_mirror;
    j["snr1_db"] = number_json(cfg.snr1_db);
    j["snr2_db"] = number_json(cfg.snr2_db);
    j["n_packets"] = cfg.n_packets;
    j["tx_mismatch"] = write_mismatch(cfg.tx_mismatch);
    j["rx_mismatch"] = cfg.rx_mismatch ? write_mismatch(*cfg.rx_mismatch) : ordered_json(nullptr);
    j["mode"] = std::string(cfg.mode.tag());
    j["cfar_pfa"] = cfg.cfar_pfa;
    j["merge_tol"] = cfg.merge_tol;
    j["block_fading"] = cfg.block_fading;
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    j["variance_samples"] = cfg.variance_samples;
    if (cfg.sweep) {
        ordered_json s;
        s["axis"] = std::string(axis_name(cfg.sweep->axis));
        s["grid"] = numbers_json(cfg.sweep->grid);
        ordered_json modes = ordered_json::array();
        for (const auto &m : cfg.sweep->modes) {
            modes.push_back(std::string(m.tag()));
        }
        s["modes"] = modes;
        s["rx_follows_tx"] = cfg.sweep->rx_follows_tx;
        s["lock_delta_snr_db"] =
            cfg.sweep->lock_delta_snr_db ? ordered_json(*cfg.sweep->lock_delta_snr_db) : ordered_json(nullptr);
        j["sweep"] = s;
    }
    if (cfg.outage) {
        const OutageConfig &o = *cfg.outage;
        ordered_json s;
        s["p_mk"] = o.p_mk;
        s["p0"] = o.p0;
        s["noise_p"] = o.noise_p;
        s["var_g"] = o.var_g;
        s["var_h"] = o.var_h;
        s["rate_p"] = o.rate_p;
        s["sec_mismatch"] = write_mismatch(o.sec_mismatch);
        s["irr_grid"] = numbers_json(o.irr_grid);
        j["outage"] = s;
    }
    if (cfg.frame) {
        const FrameConfig &f = *cfg.frame;
        ordered_json s;
        s["subcarriers"] = f.subcarriers;
        s["users"] = f.users;
        s["snr_db"] = f.snr_db;
        s["pattern"] = f.pattern;
        s["activity"] = f.activity;
        if (f.pattern == "list") {
            s["active"] = f.active;
        }
        j["frame"] = s;
    }
    if (cfg.figure) {
        ordered_json s;
        s["irr_grid"] = numbers_json(cfg.figure->irr_grid);
        s["snr1_grid"] = numbers_json(cfg.figure->snr1_grid);
        s["delta_snr_db"] = numbers_json(cfg.figure->delta_snr_db);
        j["figure"] = s;
    }
    ordered_json out;
    if (cfg.output_path) {
        out["path"] = *cfg.output_path;
    }
    out["format"] = cfg.output_format == OutputFormat::Json ? "json" : "csv";
    j["output"] = out;
    return j;
}

std::string serialize_config(const ExperimentConfig &cfg) { return to_json(cfg).dump(2); }

std::string config_hash(const ExperimentConfig &cfg) {
    // The output location does not change results.
    ExperimentConfig canonical = cfg;
    canonical.output_path.reset();
    canonical.output_format = OutputFormat::Csv;
    const std::string text = to_json(canonical).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace iqsense
