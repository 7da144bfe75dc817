#ifndef SENH_PLOT_HPP
#define SENH_PLOT_HPP

#include <string>

#include "senh/audio.hpp"

namespace senh {

// Waveform comparison figure: ground truth (blue) overlaid with the
// prediction (red) over [from_s, to_s), written as SVG plus a TSV dump of the
// plotted samples (time, truth, prediction) next to it.
void plot_comparison(const AudioBuffer& truth, const AudioBuffer& prediction,
                     double from_s, double to_s, const std::string& svg_path,
                     const std::string& tsv_path);

}  // namespace senh

#endif  // SENH_PLOT_HPP
