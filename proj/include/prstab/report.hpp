#pragma once

#include <string>

#include "prstab/estimation.hpp"
#include "prstab/injectivity.hpp"
#include "prstab/json_out.hpp"
#include "prstab/random_frames.hpp"
#include "prstab/robustness.hpp"

namespace prstab {

/// JSON views of the library results. Subsets are bit strings, index 0 first.
Json certificate_json(const Frame& f, const Certificate& c);
Json constants_json(const Frame& f, const StabilityConstants& c);
Json stability_json(const StabilityReport& r, const QBrackets& b);
Json crlb_json(const Frame& f, std::span<const double> x, double sigma, const CrlbResult& c);
Json estimation_json(const EstimationRun& run);
Json study_json(const std::string& study, const StudyResult& res, const Json& params);

/// "trial,residual,distance" rows.
std::string estimation_csv(const EstimationRun& run);
/// "n,m,trial,statistic,value,exact" rows.
std::string study_csv(const StudyResult& res);

}  // namespace prstab
