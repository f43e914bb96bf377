#pragma once

#include "bernstein.hpp"
#include "classical_fit.hpp"
#include "commands.hpp"
#include "dataset.hpp"
#include "geometry.hpp"
#include "mcmc.hpp"
#include "pipeline.hpp"
#include "posterior.hpp"
#include "random.hpp"
#include "reproduce.hpp"
#include "simulate.hpp"
#include "version.hpp"
