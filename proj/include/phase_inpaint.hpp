#pragma once

#include "phase_inpaint/common.hpp"
#include "phase_inpaint/gabor.hpp"
#include "phase_inpaint/signals.hpp"
#include "phase_inpaint/masks.hpp"
#include "phase_inpaint/observe.hpp"
#include "phase_inpaint/metrics.hpp"
#include "phase_inpaint/gli.hpp"
#include "phase_inpaint/pli.hpp"
#include "phase_inpaint/pci.hpp"
#include "phase_inpaint/experiments.hpp"
