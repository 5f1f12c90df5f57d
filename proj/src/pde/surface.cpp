#include <algorithm>
#include <cmath>
#include <ostream>

#include "stackelberg/pde.hpp"

namespace stackelberg::pde {

double interpolate(const std::vector<double>& knots, const std::vector<double>& values, double x) {
    if (knots.empty() || knots.size() != values.size())
        throw std::invalid_argument("interpolate: malformed knot set");
    const double eps = 1e-12 * (1.0 + std::abs(x));
    if (x < knots.front() - eps || x > knots.back() + eps) {
        throw std::out_of_range("interpolate: x=" + format_number(x) + " outside [" +
                                format_number(knots.front()) + ", " + format_number(knots.back()) + "]");
    }
    if (knots.size() == 1 || x <= knots.front()) return values.front();
    if (x >= knots.back()) return values.back();
    const auto it = std::upper_bound(knots.begin(), knots.end(), x);
    const auto i = static_cast<std::size_t>(it - knots.begin());
    const double x0 = knots[i - 1], x1 = knots[i];
    if (x1 == x0) return values[i];
    const double w = (x - x0) / (x1 - x0);
    return values[i - 1] + w * (values[i] - values[i - 1]);
}

namespace {

template <class Layer>
const Layer& pick_layer(const std::vector<Layer>& layers, double t) {
    if (layers.empty()) throw std::logic_error("surface has no layers");
    const double eps = 1e-12 * (1.0 + std::abs(t));
    auto it = std::upper_bound(layers.begin(), layers.end(), t + eps,
                               [](double value, const Layer& l) { return value < l.t; });
    if (it == layers.begin()) return layers.front();
    return *(it - 1);
}

void write_header(std::ostream& out, std::string_view header) {
    out << "# schema=1\n" << header << '\n';
}

}  // namespace

ValueSurface::ValueSurface(std::vector<SurfaceLayer> layers, Diagnostics diagnostics)
    : layers_(std::move(layers)), diagnostics_(std::move(diagnostics)) {
    std::sort(layers_.begin(), layers_.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
    for (const auto& l : layers_) {
        if (l.coord.size() != l.value.size() || l.coord.size() != l.a_star.size() ||
            l.coord.size() != l.z_star.size()) {
            throw std::invalid_argument("ValueSurface: layer arrays differ in length");
        }
    }
}

const SurfaceLayer& ValueSurface::layer_at(double t) const { return pick_layer(layers_, t); }

double ValueSurface::value_at(double t, double x) const {
    const auto& l = layer_at(t);
    return interpolate(l.coord, l.value, x);
}

void ValueSurface::write_csv(std::ostream& out, std::string_view coord_name,
                             std::string_view value_name, int stride) const {
    std::string header = "t,";
    header += coord_name;
    header += ',';
    header += value_name;
    header += ",a_star,z_star";
    write_header(out, header);
    stride = std::max(stride, 1);
    const std::size_t n = layers_.size();
    for (std::size_t k = 0; k < n; ++k) {
        if (k % static_cast<std::size_t>(stride) != 0 && k + 1 != n) continue;
        const auto& l = layers_[k];
        for (std::size_t j = 0; j < l.coord.size(); ++j) {
            out << format_number(l.t) << ',' << format_number(l.coord[j]) << ','
                << format_number(l.value[j]) << ',' << format_number(l.a_star[j]) << ','
                << format_number(l.z_star[j]) << '\n';
        }
    }
}

MaskedSurface2D::MaskedSurface2D(std::vector<MaskedLayer2D> layers, Diagnostics diagnostics)
    : layers_(std::move(layers)), diagnostics_(std::move(diagnostics)) {
    std::sort(layers_.begin(), layers_.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
}

const MaskedLayer2D& MaskedSurface2D::layer_at(double t) const { return pick_layer(layers_, t); }

namespace {

double column_value(const MaskedLayer2D& l, std::size_t i, double y) {
    const auto& ys = l.y[i];
    return interpolate(ys, l.value[i], std::clamp(y, ys.front(), ys.back()));
}

}  // namespace

double MaskedLayer2D::value_at(double x, double y) const {
    const MaskedLayer2D& l = *this;
    const auto& xs = l.x;
    x = std::clamp(x, xs.front(), xs.back());
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    std::size_t i = it == xs.begin() ? 0 : static_cast<std::size_t>(it - xs.begin()) - 1;
    if (i + 1 >= xs.size()) return column_value(l, xs.size() - 1, y);
    const double w = (x - xs[i]) / (xs[i + 1] - xs[i]);
    if (w == 0.0) return column_value(l, i, y);
    // Both columns are read at the same relative height inside their masks.
    const auto& y0 = l.y[i];
    const auto& y1 = l.y[i + 1];
    const double lo = y0.front() + w * (y1.front() - y0.front());
    const double hi = y0.back() + w * (y1.back() - y0.back());
    const double theta = hi > lo ? std::clamp((y - lo) / (hi - lo), 0.0, 1.0) : 0.0;
    const double v0 = column_value(l, i, y0.front() + theta * (y0.back() - y0.front()));
    const double v1 = column_value(l, i + 1, y1.front() + theta * (y1.back() - y1.front()));
    return v0 + w * (v1 - v0);
}

double MaskedSurface2D::value_at(double t, double x, double y) const {
    return layer_at(t).value_at(x, y);
}

void MaskedSurface2D::write_csv(std::ostream& out, int stride) const {
    write_header(out, "t,x,y,value,a_star,z_star");
    stride = std::max(stride, 1);
    const std::size_t n = layers_.size();
    for (std::size_t k = 0; k < n; ++k) {
        if (k % static_cast<std::size_t>(stride) != 0 && k + 1 != n) continue;
        const auto& l = layers_[k];
        for (std::size_t i = 0; i < l.x.size(); ++i) {
            for (std::size_t j = 0; j < l.y[i].size(); ++j) {
                out << format_number(l.t) << ',' << format_number(l.x[i]) << ','
                    << format_number(l.y[i][j]) << ',' << format_number(l.value[i][j]) << ','
                    << format_number(l.a_star[i][j]) << ',' << format_number(l.z_star[i][j]) << '\n';
            }
        }
    }
}

}  // namespace stackelberg::pde
