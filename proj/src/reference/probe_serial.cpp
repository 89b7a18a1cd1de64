#include "gpv/probe.hpp"

namespace gpv::probe::reference {

ExperimentReport run_experiment(const FeatureMatrix& f, const SafetyTable& safety, const ProbeConfig& cfg) {
    if (cfg.repeats < 1) throw ValidationError("probe repeats must be >= 1");
    const auto s = aligned_safety(f, safety);
    std::vector<RepeatResult> repeats;
    for (int r = 0; r < cfg.repeats; ++r) repeats.push_back(run_repeat(f, s, cfg, r));
    return summarize(f, std::move(repeats));
}

}  // namespace gpv::probe::reference
