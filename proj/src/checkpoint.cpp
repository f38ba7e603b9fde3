#include "safedqn/checkpoint.hpp"

#include "safedqn/run_config.hpp"

#include <json.hpp>
#include <zlib.h>

#include <cstring>
#include <fstream>
#include <sstream>

namespace safedqn::checkpoint {

using nlohmann::json;

namespace {

constexpr char kReplayMagic[8] = {'S', 'D', 'Q', 'N', 'R', 'P', 'L', '1'};

std::uint32_t crc32_of(const void* data, std::size_t size, std::uint32_t seed = 0) {
    uLong crc = seed;
    const auto* p = static_cast<const Bytef*>(data);
    while (size > 0) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(size, 1u << 30));
        crc = ::crc32(crc, p, chunk);
        p += chunk;
        size -= chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

std::string hex32(std::uint32_t v) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", v);
    return buf;
}

json fields_json(const config::Fields& fields) {
    json j = json::object();
    for (const auto& [k, v] : fields) j[k] = v;
    return j;
}

json net_json(const nn::DuelingNet& net) {
    const auto& s = net.shape();
    json layers = json::array();
    for (const auto& l : net.layers()) {
        const auto w = net.weights(l);
        const auto b = net.bias(l);
        layers.push_back({{"rows", l.rows},
                          {"cols", l.cols},
                          {"weights", std::vector<double>(w.begin(), w.end())},
                          {"bias", std::vector<double>(b.begin(), b.end())}});
    }
    return {{"shape",
             {{"input_dim", s.input_dim},
              {"hidden", s.hidden},
              {"action_count", s.action_count},
              {"residual_projection", s.residual_projection}}},
            {"layers", layers}};
}

nn::DuelingNet net_from(const json& j, const nn::NetShape& expected, const std::string& name) {
    nn::NetShape shape;
    const auto& js = j.at("shape");
    shape.input_dim = js.at("input_dim").get<std::size_t>();
    shape.hidden = js.at("hidden").get<std::vector<std::size_t>>();
    shape.action_count = js.at("action_count").get<std::size_t>();
    shape.residual_projection = js.at("residual_projection").get<bool>();
    if (!(shape == expected)) throw CheckpointError("network '" + name + "' shape disagrees with the config echo");
    nn::DuelingNet net(shape);
    const auto& layers = j.at("layers");
    if (layers.size() != net.layers().size())
        throw CheckpointError("network '" + name + "': expected " + std::to_string(net.layers().size()) + " layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& slot = net.layers()[i];
        const auto& jl = layers[i];
        const auto rows = jl.at("rows").get<std::size_t>(), cols = jl.at("cols").get<std::size_t>();
        const auto w = jl.at("weights").get<std::vector<double>>();
        const auto b = jl.at("bias").get<std::vector<double>>();
        auto dw = net.weights(slot);
        auto db = net.bias(slot);
        if (rows != slot.rows || cols != slot.cols || w.size() != dw.size() || b.size() != db.size())
            throw CheckpointError("network '" + name + "' layer " + std::to_string(i) + ": dimension mismatch");
        std::copy(w.begin(), w.end(), dw.begin());
        std::copy(b.begin(), b.end(), db.begin());
    }
    return net;
}

json adam_json(const nn::AdamState& a) {
    return {{"first_moments", a.first_moments},
            {"second_moments", a.second_moments},
            {"step_count", a.step_count},
            {"lr", a.lr},
            {"lr_decay", a.lr_decay},
            {"beta1", a.beta1},
            {"beta2", a.beta2},
            {"epsilon", a.epsilon},
            {"decay_per_update", a.decay_per_update}};
}

nn::AdamState adam_from(const json& j, std::size_t params, const std::string& name) {
    nn::AdamState a;
    a.first_moments = j.at("first_moments").get<nn::ParamVector>();
    a.second_moments = j.at("second_moments").get<nn::ParamVector>();
    a.step_count = j.at("step_count").get<std::uint64_t>();
    a.lr = j.at("lr").get<double>();
    a.lr_decay = j.at("lr_decay").get<double>();
    a.beta1 = j.at("beta1").get<double>();
    a.beta2 = j.at("beta2").get<double>();
    a.epsilon = j.at("epsilon").get<double>();
    a.decay_per_update = j.at("decay_per_update").get<bool>();
    if (a.first_moments.size() != params || a.second_moments.size() != params)
        throw CheckpointError("adam state '" + name + "' has the wrong parameter count");
    return a;
}

json bundle_body(const agent::PolicyBundle& b, const env::EnvConfig& e) {
    return {{"config", {{"agent", fields_json(config::agent_fields(b.config))}, {"env", fields_json(config::env_fields(e))}}},
            {"networks",
             {{"goal", net_json(b.goal_net)},
              {"goal_target", net_json(b.goal_target)},
              {"safety", net_json(b.safety_net)},
              {"safety_target", net_json(b.safety_target)}}},
            {"adam", {{"goal", adam_json(b.goal_adam)}, {"safety", adam_json(b.safety_adam)}}}};
}

LoadedBundle bundle_from(const json& body) {
    LoadedBundle out;
    const auto& cfg = body.at("config");
    try {
        for (const auto& [k, v] : cfg.at("agent").items()) config::apply_agent_field(out.bundle.config, k, v.get<std::string>());
        for (const auto& [k, v] : cfg.at("env").items()) config::apply_env_field(out.env, k, v.get<std::string>());
    } catch (const config::ConfigError& e) {
        throw CheckpointError(std::string("config echo: ") + e.what());
    }
    out.env.k_neighbors = out.bundle.config.k;
    const nn::NetShape shape = agent::net_shape(out.bundle.config);
    const auto& nets = body.at("networks");
    auto& b = out.bundle;
    b.goal_net = net_from(nets.at("goal"), shape, "goal");
    b.goal_target = net_from(nets.at("goal_target"), shape, "goal_target");
    b.safety_net = net_from(nets.at("safety"), shape, "safety");
    b.safety_target = net_from(nets.at("safety_target"), shape, "safety_target");
    b.goal_adam = adam_from(body.at("adam").at("goal"), b.goal_net.param_count(), "goal");
    b.safety_adam = adam_from(body.at("adam").at("safety"), b.safety_net.param_count(), "safety");
    return out;
}

std::string envelope(const json& body) {
    const std::string text = body.dump();
    json env;
    env["format_version"] = kFormatVersion;
    env["checksum"] = hex32(crc32_of(text.data(), text.size()));
    env["body"] = body;
    return env.dump() + "\n";
}

json open_envelope(std::string_view text) {
    json env;
    try {
        env = json::parse(text);
    } catch (const json::parse_error& e) {
        throw CheckpointError(std::string("checkpoint is not valid JSON: ") + e.what());
    }
    if (!env.is_object() || !env.contains("format_version") || !env.contains("checksum") || !env.contains("body"))
        throw CheckpointError("checkpoint envelope is missing format_version, checksum or body");
    const int version = env.at("format_version").get<int>();
    if (version != kFormatVersion)
        throw CheckpointError("unsupported checkpoint format_version " + std::to_string(version) + " (expected " +
                              std::to_string(kFormatVersion) + ")");
    const std::string body_text = env.at("body").dump();
    const std::string expected = env.at("checksum").get<std::string>();
    const std::string actual = hex32(crc32_of(body_text.data(), body_text.size()));
    if (expected != actual) throw CheckpointError("checkpoint checksum mismatch (stored " + expected + ", computed " + actual + ")");
    return std::move(env.at("body"));
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& data) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw CheckpointError("cannot write '" + tmp.string() + "'");
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        if (!out) throw CheckpointError("short write to '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

template <class T>
void put(std::string& out, const T& v) {
    out.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
void put_array(std::string& out, const std::vector<T>& v) {
    out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(T));
}

class Reader {
public:
    explicit Reader(const std::string& data) : data_(data) {}
    template <class T>
    T get() {
        T v;
        need(sizeof(T));
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    template <class T>
    std::vector<T> array(std::size_t n) {
        need(n * sizeof(T));
        std::vector<T> v(n);
        std::memcpy(v.data(), data_.data() + pos_, n * sizeof(T));
        pos_ += n * sizeof(T);
        return v;
    }
    bool done() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) throw CheckpointError("replay sidecar is truncated");
    }
    const std::string& data_;
    std::size_t pos_ = 0;
};

std::string replay_bytes(const agent::ReplayBuffer& buf) {
    const auto s = buf.storage();
    std::string out(kReplayMagic, sizeof kReplayMagic);
    put<std::uint64_t>(out, buf.capacity());
    put<std::uint64_t>(out, buf.obs_dim());
    put<std::uint64_t>(out, buf.size());
    put<std::uint64_t>(out, buf.head());
    put_array(out, s.xs);
    put_array(out, s.xns);
    put_array(out, s.r_g);
    put_array(out, s.r_c);
    std::vector<std::uint64_t> actions(s.actions.begin(), s.actions.end());
    put_array(out, actions);
    put_array(out, s.done);
    return out;
}

agent::ReplayBuffer replay_from(const std::string& data) {
    if (data.size() < sizeof kReplayMagic || std::memcmp(data.data(), kReplayMagic, sizeof kReplayMagic) != 0)
        throw CheckpointError("replay sidecar has a bad magic number");
    const std::string payload = data.substr(sizeof kReplayMagic);
    Reader r(payload);
    const auto capacity = r.get<std::uint64_t>(), dim = r.get<std::uint64_t>();
    const auto size = r.get<std::uint64_t>(), head = r.get<std::uint64_t>();
    if (size > capacity || dim == 0 || capacity == 0) throw CheckpointError("replay sidecar header is inconsistent");
    agent::ReplayBuffer::Storage s;
    s.xs = r.array<double>(size * dim);
    s.xns = r.array<double>(size * dim);
    s.r_g = r.array<double>(size);
    s.r_c = r.array<double>(size);
    const auto actions = r.array<std::uint64_t>(size);
    s.actions.assign(actions.begin(), actions.end());
    s.done = r.array<unsigned char>(size);
    if (!r.done()) throw CheckpointError("replay sidecar has trailing bytes");
    agent::ReplayBuffer buf(capacity, dim);
    buf.restore(capacity, dim, size, head, std::move(s));
    return buf;
}

}  // namespace

std::filesystem::path replay_sidecar(const std::filesystem::path& checkpoint_path) {
    return checkpoint_path.string() + ".replay";
}

std::string serialize_bundle(const agent::PolicyBundle& bundle, const env::EnvConfig& env_config) {
    json body = bundle_body(bundle, env_config);
    body["kind"] = "bundle";
    return envelope(body);
}

LoadedBundle parse_bundle(std::string_view text) {
    try {
        return bundle_from(open_envelope(text));
    } catch (const CheckpointError&) {
        throw;
    } catch (const std::exception& e) {
        throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
    }
}

void save_bundle(const std::filesystem::path& path, const agent::PolicyBundle& bundle,
                 const env::EnvConfig& env_config) {
    write_file(path, serialize_bundle(bundle, env_config));
}

LoadedBundle load_bundle(const std::filesystem::path& path) { return parse_bundle(read_file(path)); }

void save_trainer(const std::filesystem::path& path, const agent::TrainerState& st) {
    const std::string replay = replay_bytes(st.buffer);
    const auto sidecar = replay_sidecar(path);
    write_file(sidecar, replay);

    std::ostringstream rng;
    rng << st.agent_rng;
    json body = bundle_body(st.bundle, st.env_config);
    body["kind"] = "trainer";
    body["trainer"] = {{"seed", st.seed},
                       {"next_episode", st.next_episode},
                       {"global_step", st.global_step},
                       {"sync_count", st.sync_count},
                       {"agent_rng", rng.str()},
                       {"replay",
                        {{"file", sidecar.filename().string()},
                         {"bytes", replay.size()},
                         {"crc32", hex32(crc32_of(replay.data(), replay.size()))}}}};
    write_file(path, envelope(body));
}

agent::TrainerState load_trainer(const std::filesystem::path& path) {
    try {
        const json body = open_envelope(read_file(path));
        if (body.value("kind", "") != "trainer")
            throw CheckpointError("'" + path.string() + "' is a bundle checkpoint without training state");
        LoadedBundle lb = bundle_from(body);
        const auto& t = body.at("trainer");
        agent::TrainerState st;
        st.bundle = std::move(lb.bundle);
        st.env_config = lb.env;
        st.seed = t.at("seed").get<std::uint64_t>();
        st.next_episode = t.at("next_episode").get<std::size_t>();
        st.global_step = t.at("global_step").get<std::uint64_t>();
        st.sync_count = t.at("sync_count").get<std::uint64_t>();
        std::istringstream rng(t.at("agent_rng").get<std::string>());
        rng >> st.agent_rng;
        if (!rng) throw CheckpointError("agent_rng state is malformed");

        const auto& rj = t.at("replay");
        const auto sidecar = path.parent_path() / rj.at("file").get<std::string>();
        std::string replay;
        {
            std::ifstream in(sidecar, std::ios::binary);
            if (!in) throw CheckpointError("cannot open replay sidecar '" + sidecar.string() + "'");
            std::ostringstream ss;
            ss << in.rdbuf();
            replay = ss.str();
        }
        if (replay.size() != rj.at("bytes").get<std::size_t>() ||
            hex32(crc32_of(replay.data(), replay.size())) != rj.at("crc32").get<std::string>())
            throw CheckpointError("replay sidecar checksum mismatch");
        st.buffer = replay_from(replay);
        if (st.buffer.obs_dim() != st.bundle.input_dim())
            throw CheckpointError("replay sidecar observation size disagrees with the networks");
        return st;
    } catch (const CheckpointError&) {
        throw;
    } catch (const std::exception& e) {
        throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
    }
}

}  // namespace safedqn::checkpoint
