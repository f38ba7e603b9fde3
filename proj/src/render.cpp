#include "safedqn/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <ostream>

namespace safedqn::render {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

class Canvas {
public:
    Canvas(double world, const SvgOptions& o) : world_(world), o_(o) {}
    double px(double x) const { return o_.margin + x / world_ * o_.canvas; }
    double py(double y) const { return o_.margin + (1.0 - y / world_) * o_.canvas; }
    double len(double d) const { return d / world_ * o_.canvas; }

private:
    double world_;
    SvgOptions o_;
};

// Distance along (cos h, sin h) from (x, y) to the boundary of [0, w]^2.
double exit_distance(double x, double y, double h, double w) {
    const double dx = std::cos(h), dy = std::sin(h);
    double t = std::numeric_limits<double>::infinity();
    if (dx > 1e-12) t = std::min(t, (w - x) / dx);
    if (dx < -1e-12) t = std::min(t, -x / dx);
    if (dy > 1e-12) t = std::min(t, (w - y) / dy);
    if (dy < -1e-12) t = std::min(t, -y / dy);
    return std::isfinite(t) ? std::max(t, 0.0) : 0.0;
}

std::string star_points(double cx, double cy, double r_out, double r_in) {
    std::string pts;
    for (int i = 0; i < 10; ++i) {
        const double r = (i % 2 == 0) ? r_out : r_in;
        const double a = std::numbers::pi / 2.0 + i * std::numbers::pi / 5.0;
        pts += (i ? " " : "") + num(cx + r * std::cos(a)) + "," + num(cy - r * std::sin(a));
    }
    return pts;
}

}  // namespace

std::string render_svg(const trace::Trace& tr, const SvgOptions& o) {
    const double world = tr.has_header ? tr.header.world_size : 1.0;
    const Canvas c(world, o);
    const double side = o.canvas + 2.0 * o.margin;
    std::string s;
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(side) + "\" height=\"" + num(side) +
         "\" viewBox=\"0 0 " + num(side) + " " + num(side) + "\">\n";
    s += "<rect x=\"" + num(o.margin) + "\" y=\"" + num(o.margin) + "\" width=\"" + num(o.canvas) + "\" height=\"" +
         num(o.canvas) + "\" fill=\"white\" stroke=\"black\" stroke-width=\"2\"/>\n";
    if (!tr.has_header) {
        s += "</svg>\n";
        return s;
    }
    const auto& h = tr.header;

    s += "<g id=\"routes\" stroke=\"#bbbbbb\" stroke-width=\"1.5\" stroke-dasharray=\"6,4\">\n";
    for (const auto& r : h.routes) {
        const double d = exit_distance(r.entry_x, r.entry_y, r.heading, world);
        const double ex = r.entry_x + d * std::cos(r.heading), ey = r.entry_y + d * std::sin(r.heading);
        s += "<line x1=\"" + num(c.px(r.entry_x)) + "\" y1=\"" + num(c.py(r.entry_y)) + "\" x2=\"" + num(c.px(ex)) +
             "\" y2=\"" + num(c.py(ey)) + "\"/>\n";
    }
    s += "</g>\n";

    const auto& intruders = tr.steps.empty() ? h.intruders : tr.steps.back().intruders;
    s += "<g id=\"intruders\">\n";
    for (const auto& it : intruders) {
        s += "<circle cx=\"" + num(c.px(it.x)) + "\" cy=\"" + num(c.py(it.y)) + "\" r=\"" +
             num(c.len(h.conflict_radius)) + "\" fill=\"none\" stroke=\"#e06666\" stroke-dasharray=\"3,3\"/>\n";
        s += "<circle cx=\"" + num(c.px(it.x)) + "\" cy=\"" + num(c.py(it.y)) + "\" r=\"4.00\" fill=\"#cc0000\"/>\n";
    }
    s += "</g>\n";

    const double gx = c.px(h.goal_x), gy = c.py(h.goal_y);
    s += "<circle cx=\"" + num(gx) + "\" cy=\"" + num(gy) + "\" r=\"" + num(c.len(h.goal_radius)) +
         "\" fill=\"#fff2cc\" stroke=\"#bf9000\"/>\n";
    s += "<polygon id=\"goal\" points=\"" + star_points(gx, gy, 10.0, 4.0) + "\" fill=\"#f1c232\" stroke=\"#7f6000\"/>\n";

    std::string path = num(c.px(h.ownship.x)) + "," + num(c.py(h.ownship.y));
    for (const auto& st : tr.steps) path += " " + num(c.px(st.x)) + "," + num(c.py(st.y));
    s += "<polyline id=\"ownship-path\" points=\"" + path + "\" fill=\"none\" stroke=\"#1155cc\" stroke-width=\"2\"/>\n";
    s += "<g id=\"conflicts\" fill=\"#ff9900\">\n";
    for (const auto& st : tr.steps)
        if (st.conflict) s += "<circle cx=\"" + num(c.px(st.x)) + "\" cy=\"" + num(c.py(st.y)) + "\" r=\"2.50\"/>\n";
    s += "</g>\n";

    const double ox = tr.steps.empty() ? h.ownship.x : tr.steps.back().x;
    const double oy = tr.steps.empty() ? h.ownship.y : tr.steps.back().y;
    s += "<circle cx=\"" + num(c.px(ox)) + "\" cy=\"" + num(c.py(oy)) + "\" r=\"" + num(c.len(h.conflict_radius)) +
         "\" fill=\"none\" stroke=\"#1155cc\" stroke-dasharray=\"3,3\"/>\n";
    s += "<circle id=\"ownship\" cx=\"" + num(c.px(ox)) + "\" cy=\"" + num(c.py(oy)) +
         "\" r=\"5.00\" fill=\"#1155cc\"/>\n";
    s += "<circle id=\"start\" cx=\"" + num(c.px(h.ownship.x)) + "\" cy=\"" + num(c.py(h.ownship.y)) +
         "\" r=\"4.00\" fill=\"none\" stroke=\"#1155cc\" stroke-width=\"2\"/>\n";
    s += "</svg>\n";
    return s;
}

void write_svg(std::ostream& os, const trace::Trace& trace, const SvgOptions& options) {
    os << render_svg(trace, options);
}

}  // namespace safedqn::render
