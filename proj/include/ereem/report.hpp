#pragma once

// JSON views of results. Non-finite numbers serialize as null.

#include <json.hpp>

#include "ereem/calibration.hpp"
#include "ereem/io.hpp"
#include "ereem/fitting.hpp"
#include "ereem/nv_model.hpp"
#include "ereem/pulse_sim.hpp"
#include "ereem/ramsey.hpp"
#include "ereem/sensitivity.hpp"

namespace ereem {

using Json = nlohmann::ordered_json;

Json to_json(const SpeciesConstants& c);
Json to_json(const BiasField& f);
Json to_json(const FitResult& r);
Json to_json(const EreemFitResult& r, double confidence = 0.95);
Json to_json(const FourToneFitResult& r, double confidence = 0.95);
Json to_json(const BootstrapResult& r);
Json to_json(const OdmrFit& r);
Json to_json(const FieldEstimate& e);
Json to_json(const CenterCalibration& c);
Json to_json(const CrosscheckResult& c);
Json to_json(const EffectiveFieldDecomposition& d);
Json to_json(const WorkingPoint& w);
/// Analytic envelope predictions for one configuration.
Json envelope_summary(const SpeciesConstants& c, const BiasField& f, Protocol p);

CsvTable grid_to_csv(const SensitivityGrid& g);
Json grid_axes(const SensitivityGrid& g);
CsvTable contours_to_csv(const std::vector<ContourLine>& lines);

}  // namespace ereem
