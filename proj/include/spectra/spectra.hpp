#pragma once

#include "spectra/error.hpp"
#include "spectra/symbolic.hpp"
#include "spectra/geometry.hpp"
#include "spectra/potential.hpp"
#include "spectra/parallel.hpp"
#include "spectra/sublevel.hpp"
#include "spectra/dimension.hpp"
#include "spectra/extraction.hpp"
#include "spectra/realizer.hpp"
#include "spectra/io.hpp"
#include "spectra/commands.hpp"
