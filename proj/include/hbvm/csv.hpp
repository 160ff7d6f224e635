#ifndef HBVM_CSV_HPP
#define HBVM_CSV_HPP

#include <string>

#include "hbvm/bvm.hpp"
#include "hbvm/model.hpp"
#include "hbvm/types.hpp"

namespace hbvm {

// Floats are written with 17 significant digits so files round-trip losslessly.
std::string format_double(double v);

// header: index,x_1,...,x_p
std::string batch_to_csv(const ObservationBatch& batch);
ObservationBatch batch_from_csv(const std::string& text);

// header: theta_1,...,theta_d,log_unnorm,density
std::string posterior_to_csv(const PosteriorGrid& pg);

void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace hbvm

#endif
