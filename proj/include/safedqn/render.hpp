#pragma once

// SVG trajectory plots from episode traces.

#include "safedqn/trace.hpp"

#include <iosfwd>
#include <string>

namespace safedqn::render {

struct SvgOptions {
    double canvas = 800.0;  // pixels per side of the world square
    double margin = 20.0;
};

// Routes, intruders with conflict-radius circles, ownship path, goal star.
// A trace without a header yields the bare world frame.
std::string render_svg(const trace::Trace& trace, const SvgOptions& options = {});

void write_svg(std::ostream& os, const trace::Trace& trace, const SvgOptions& options = {});

}  // namespace safedqn::render
