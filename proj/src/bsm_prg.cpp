#include "sada/bsm_prg.hpp"

#include <algorithm>
#include <cmath>

namespace sada {

std::vector<std::string> PrgParams::validate() const {
    std::vector<std::string> v;
    if (a == 0) v.push_back("prg: a must be positive");
    if (b == 0 || b > 64) v.push_back("prg: key length b must be in [1,64]");
    if (c != 1) v.push_back("prg: this artifact fixes c = 1");
    if (t == 0 || t > a) v.push_back("prg: t must satisfy 1 <= t <= a");
    if (c > a / 4) v.push_back("prg: c must be at most a/4");
    return v;
}

void PrgParams::check() const {
    auto v = validate();
    if (!v.empty()) throw ValidationError(std::move(v));
}

PrgKey uniform_key(Rng& rng, unsigned b) {
    if (b == 0 || b > 64) throw Error("key length must be in [1,64]");
    return PrgKey{rng.bits(b), b};
}

PrgSelector derive_selector(const PrgKey& key, const PrgParams& params) {
    params.check();
    if (key.width != params.b) throw Error("key length does not match params");
    PrgSelector sel;
    sel.positions.reserve(params.t);
    // Fold the b key bits into the stream seed; every key bit matters.
    const std::uint64_t seed0 = mix64(key.bits ^ mix64(params.b * kGolden));
    std::uint64_t counter = 0;
    std::vector<bool> taken(params.a, false);
    while (sel.positions.size() < params.t) {
        const std::uint64_t h = mix64(seed0 + (++counter) * kGolden);
        const auto pos = static_cast<std::uint32_t>(h % params.a);
        if (!taken[pos]) {
            taken[pos] = true;
            sel.positions.push_back(pos);
        }
    }
    std::sort(sel.positions.begin(), sel.positions.end());
    sel.mask = static_cast<int>(mix64(seed0 ^ 0xA5A5A5A5A5A5A5A5ULL) & 1u);
    return sel;
}

int prg_eval(BlockSource& block, const PrgKey& key, const PrgParams& params) {
    if (block.size() < params.a) throw SourceUnderflowError("block shorter than a bits");
    const PrgSelector sel = derive_selector(key, params);
    int parity = 0;
    for (std::uint32_t pos : sel.positions) parity ^= block.read_bit(pos);
    return parity ^ sel.mask;
}

PrgCursor::PrgCursor(const PrgKey& key, const PrgParams& params)
    : key_(key), params_(params), sel_(derive_selector(key, params)) {}

void PrgCursor::feed(int bit) {
    if (pos_ >= params_.a) throw Error("cursor fed past the block end");
    if (next_idx_ < sel_.positions.size() && sel_.positions[next_idx_] == pos_) {
        parity_ ^= bit;
        ++next_idx_;
    }
    ++pos_;
}

int PrgCursor::output() const {
    if (!done()) throw Error("cursor output requested before the block ended");
    return parity_ ^ sel_.mask;
}

std::uint64_t PrgCursor::state_bits() const {
    return params_.b + ceil_log2(params_.a + 1) + ceil_log2(params_.t + 1) + 1;
}

void PrgCursor::serialize_state(BitWriter& w) const {
    w.write(key_.bits, params_.b);
    w.write(pos_, ceil_log2(params_.a + 1));
    w.write(next_idx_, ceil_log2(params_.t + 1));
    w.write(static_cast<std::uint64_t>(parity_), 1);
}

void PrgCursor::deserialize_state(BitReader& r) {
    key_.bits = r.read(params_.b);
    key_.width = params_.b;
    sel_ = derive_selector(key_, params_);
    pos_ = static_cast<std::uint32_t>(r.read(ceil_log2(params_.a + 1)));
    next_idx_ = static_cast<std::uint32_t>(r.read(ceil_log2(params_.t + 1)));
    parity_ = static_cast<int>(r.read(1));
}

std::vector<std::string> BsmExperimentConfig::validate(const PrgParams& params,
                                                       bool bounded_profile) const {
    std::vector<std::string> v;
    if (T == 0) v.push_back("bsm: T must be positive");
    if (trials == 0) v.push_back("bsm: trials must be positive");
    if (bounded_profile && storage_bits > params.a / 2)
        v.push_back("bsm: bounded profile requires storage_bits <= a/2");
    return v;
}

namespace {

// Shared experiment core; real and ideal differ only in the Y provider.
using YProvider =
    std::function<int(std::size_t t, const std::vector<std::uint8_t>& block,
                      const PrgKey& key, Rng& ideal_rng)>;

int run_bsm_experiment(BsmAdversary& adv, const BsmExperimentConfig& cfg,
                       const PrgParams& params, std::uint64_t seed,
                       const YProvider& y_provider) {
    params.check();
    Rng public_rng(derive_seed(seed, "bsm-public"));
    Rng key_rng(derive_seed(seed, "bsm-key"));
    Rng ideal_rng(derive_seed(seed, "bsm-ideal-y"));

    const PrgKey key = uniform_key(key_rng, params.b);
    std::vector<std::uint8_t> ys;
    ys.reserve(cfg.T);

    for (std::size_t t = 1; t <= cfg.T; ++t) {
        std::vector<std::uint8_t> block(params.a);
        for (auto& b : block) b = static_cast<std::uint8_t>(public_rng.bit());

        const std::vector<std::uint8_t> past_y = ys;  // Y_1..Y_{t-1}, free
        ys.push_back(static_cast<std::uint8_t>(y_provider(t, block, key, ideal_rng)));

        adv.absorb(t, past_y, block);
        if (adv.state_bits() > cfg.storage_bits)
            throw StorageViolationError(t, adv.state_bits(), cfg.storage_bits);
    }
    return adv.decide(ys, key);
}

}  // namespace

int run_real_experiment(BsmAdversary& adv, const BsmExperimentConfig& cfg,
                        const PrgParams& params, std::uint64_t seed) {
    return run_bsm_experiment(
        adv, cfg, params, seed,
        [&params](std::size_t, const std::vector<std::uint8_t>& block,
                  const PrgKey& key, Rng&) {
            VectorBlockSource src(block);
            return prg_eval(src, key, params);
        });
}

int run_ideal_experiment(BsmAdversary& adv, const BsmExperimentConfig& cfg,
                         const PrgParams& params, std::uint64_t seed) {
    return run_bsm_experiment(adv, cfg, params, seed,
                              [](std::size_t, const std::vector<std::uint8_t>&,
                                 const PrgKey&, Rng& ideal) { return ideal.bit(); });
}

AdvantageEstimate estimate_advantage(const BsmAdversaryFactory& make_adv,
                                     const BsmExperimentConfig& cfg,
                                     const PrgParams& params) {
    if (cfg.trials < 100) throw Error("advantage estimation needs at least 100 trials");
    std::size_t ones_real = 0, ones_ideal = 0;
    for (std::size_t i = 0; i < cfg.trials; ++i) {
        auto adv = make_adv();
        ones_real += run_real_experiment(*adv, cfg, params,
                                         derive_seed(cfg.seed, "real-trial", i));
    }
    for (std::size_t i = 0; i < cfg.trials; ++i) {
        auto adv = make_adv();
        ones_ideal += run_ideal_experiment(*adv, cfg, params,
                                           derive_seed(cfg.seed, "ideal-trial", i));
    }
    AdvantageEstimate est;
    const double n = static_cast<double>(cfg.trials);
    est.p_real = ones_real / n;
    est.p_ideal = ones_ideal / n;
    est.advantage = std::abs(est.p_real - est.p_ideal);
    est.ci_halfwidth = 1.96 * std::sqrt(est.p_real * (1 - est.p_real) / n +
                                        est.p_ideal * (1 - est.p_ideal) / n);
    return est;
}

int BlockHoardingAdversary::decide(const std::vector<std::uint8_t>& all_y,
                                   const PrgKey& key) {
    if (blocks_.size() != all_y.size()) return 0;
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
        VectorBlockSource src(blocks_[i]);
        if (prg_eval(src, key, params_) != all_y[i]) return 0;
    }
    return 1;
}

}  // namespace sada
