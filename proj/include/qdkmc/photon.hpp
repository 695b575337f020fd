#pragma once

#include "qdkmc/kinetics.hpp"

#include <cstdint>

namespace qdkmc {

/// Beam-splitter output arm.
enum class Detector : std::uint8_t { I = 0, II = 1 };

struct PhotonRecord {
  double t_abs = 0;        // ns since the first pulse of the trajectory
  double t_in_period = 0;  // ns since the latest pulse
  std::uint64_t cycle_index = 0;
  ExcitonClass exciton_class = ExcitonClass::X;
  Detector detector = Detector::I;
};

}  // namespace qdkmc
