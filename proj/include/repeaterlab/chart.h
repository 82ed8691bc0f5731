#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "repeaterlab/results_io.h"

namespace repeaterlab {

enum class ChartKind { kRateVsNodes, kFidelityVsDistance, kMinRepeatersVsDistance };

const char* to_string(ChartKind kind);
ChartKind chart_kind_from_string(const std::string& name);

/// Standalone SVG. Every plotted row becomes one <circle class="point ...">;
/// the regression chart adds <line class="fit"> and a slope label. Throws
/// DomainError when no row can be plotted.
void render_chart(const std::vector<ResultRow>& rows, ChartKind kind, std::ostream& out);
void render_chart(const std::vector<ResultRow>& rows, ChartKind kind,
                  const std::filesystem::path& path);

}  // namespace repeaterlab
