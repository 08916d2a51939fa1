#ifndef QPROBE_QPROBE_HPP
#define QPROBE_QPROBE_HPP

#include "qprobe/dynamics.hpp"
#include "qprobe/errors.hpp"
#include "qprobe/experiment.hpp"
#include "qprobe/kernels.hpp"
#include "qprobe/metrology.hpp"
#include "qprobe/trajectories.hpp"

#endif  // QPROBE_QPROBE_HPP
