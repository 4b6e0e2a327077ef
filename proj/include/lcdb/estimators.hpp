#pragma once

// Named estimator configurations and a single entry point to run them.

#include <array>
#include <string>
#include <string_view>

#include "lcdb/boosting.hpp"
#include "lcdb/icp.hpp"
#include "lcdb/lcd.hpp"

namespace lcdb {

inline constexpr std::array<std::string_view, 6> kEstimatorNames{"lcd",        "lcd-mv", "lcd-bst",
                                                                 "lcd-bst-mv", "icp",    "boost-baseline"};

inline bool is_estimator_name(std::string_view name) {
    return std::find(kEstimatorNames.begin(), kEstimatorNames.end(), name) != kEstimatorNames.end();
}

struct EstimatorConfig {
    std::string name = "lcd";
    double alpha = 0.01;
    BoostParams boost;
    bool stop_if_empty = true;
};

/// One run of the named estimator on the full dataset.
inline PredictionScores run_estimator(const JciDataset& data, const EstimatorConfig& config,
                                      Diagnostics* diag = nullptr) {
    if (config.name == "icp") {
        return icp_predict(data, IcpConfig{config.alpha, config.boost, config.stop_if_empty}, diag);
    }
    if (config.name == "boost-baseline") return baseline_predict(data, config.boost, diag);
    return lcd_predict(data, LcdConfig::named(config.name, config.alpha, config.boost), diag);
}

}  // namespace lcdb
