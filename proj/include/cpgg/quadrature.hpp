#pragma once

#include <functional>
#include <vector>

namespace cpgg {

// Composite Gauss-Legendre integration on an explicit panel partition.
// Panels are [breaks[i], breaks[i+1]]; breaks must be increasing.
double integrate_panels(const std::function<double(double)>& f,
                        const std::vector<double>& breaks);

// Log-spaced partition of [lo, hi] (lo > 0) into `panels` panels, with the
// points of `inserts` inside (lo, hi) added as extra breakpoints.
std::vector<double> log_breaks(double lo, double hi, int panels,
                               const std::vector<double>& inserts = {});

// Integrate with panel doubling until successive values agree to rel_tol;
// returns the refined value. `inserts` are forced breakpoints (kinks).
double integrate_log_adaptive(const std::function<double(double)>& f,
                              double lo, double hi, double rel_tol,
                              const std::vector<double>& inserts = {},
                              int initial_panels = 32);

// Nodes/weights of the composite rule over a partition, for reusable grids.
struct PanelGrid {
    std::vector<double> breaks;
    std::vector<double> nodes;
    std::vector<double> weights;
};
PanelGrid make_panel_grid(const std::vector<double>& breaks);

}  // namespace cpgg
