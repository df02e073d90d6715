#include "must/features.hpp"

#include "must/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace must {

void GaborParams::validate() const {
    const auto n = scales.size();
    if (n == 0) throw UsageError("gabor: at least one scale is required");
    if (sigmas.size() != n || lambdas.size() != n) {
        throw UsageError("gabor: scales, sigmas and lambdas must have the same length");
    }
    if (orientations_deg.empty()) throw UsageError("gabor: at least one orientation is required");
    for (std::size_t i = 0; i < n; ++i) {
        if (scales[i] < 0) throw UsageError("gabor: scales must be non-negative");
        if (!(sigmas[i] > 0) || !(lambdas[i] > 0)) throw UsageError("gabor: sigma and lambda must be positive");
    }
    if (!(gamma > 0)) throw UsageError("gabor: gamma must be positive");
}

double gabor_value(int dx, int dy, double theta_rad, double gamma, double sigma, double lambda) {
    const double c = std::cos(theta_rad), s = std::sin(theta_rad);
    const double X = dx * c + dy * s;
    const double Y = -dx * s + dy * c;
    return std::exp(-(X * X + gamma * gamma * Y * Y) / (2.0 * sigma * sigma)) *
           std::cos(2.0 * std::numbers::pi / lambda * X);
}

GaborKernel::GaborKernel(int radius, std::vector<double> coefficients)
    : radius_(radius), coef_(std::move(coefficients)) {
    if (coef_.size() != static_cast<std::size_t>(side() * side())) {
        throw std::invalid_argument("GaborKernel: coefficient count does not match radius");
    }
}

GaborKernel gabor_kernel(int scale, double theta_rad, double gamma, double sigma, double lambda) {
    std::vector<double> coef;
    coef.reserve(static_cast<std::size_t>((2 * scale + 1) * (2 * scale + 1)));
    for (int dy = -scale; dy <= scale; ++dy) {
        for (int dx = -scale; dx <= scale; ++dx) coef.push_back(gabor_value(dx, dy, theta_rad, gamma, sigma, lambda));
    }
    return GaborKernel(scale, std::move(coef));
}

GaborBank::GaborBank(GaborParams params) : params_(std::move(params)) {
    params_.validate();
    kernels_.reserve(n_scales() * n_orientations());
    for (std::size_t s = 0; s < n_scales(); ++s) {
        for (double deg : params_.orientations_deg) {
            kernels_.push_back(gabor_kernel(params_.scales[s], deg * std::numbers::pi / 180.0, params_.gamma,
                                            params_.sigmas[s], params_.lambdas[s]));
        }
    }
}

S1Maps::S1Maps(const GaborBank& bank, int width, int height, double tau_leak_ms)
    : bank_(&bank), width_(width), height_(height), tau_leak_(tau_leak_ms) {
    if (width <= 0 || height <= 0) throw std::invalid_argument("S1Maps: dimensions must be positive");
    if (!(tau_leak_ms > 0)) throw UsageError("feature.tau_leak_ms must be positive");
    cells_.resize(bank.n_scales() * bank.n_orientations() * static_cast<std::size_t>(width) *
                  static_cast<std::size_t>(height));
}

void S1Maps::deliver(const Event& event) {
    if (event.x >= width_ || event.y >= height_) throw DataError("s1: event outside the sensor");
    const double t = event.t_ms();
    if (any_event_ && t < clock_) throw DataError("s1: timestamp regression");
    any_event_ = true;
    clock_ = std::max(clock_, t);
    synchronized_ = false;

    const std::size_t n_o = bank_->n_orientations();
    const std::size_t plane = static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    const int ex = event.x, ey = event.y;

    for (std::size_t s = 0; s < bank_->n_scales(); ++s) {
        const int r = bank_->params().scales[s];
        const int x0 = std::max(0, ex - r), x1 = std::min(width_ - 1, ex + r);
        const int y0 = std::max(0, ey - r), y1 = std::min(height_ - 1, ey + r);
        Cell* base = &cells_[s * n_o * plane];

        // All orientations of one scale share receptive fields, so their
        // cells always carry the same last_t and one decay factor serves all.
        double cached_dt = -1.0, cached_factor = 1.0;
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const std::size_t pix = static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
                                        static_cast<std::size_t>(x);
                const double dt = t - base[pix].last_t;
                double factor = 1.0;
                if (dt != 0.0) {
                    if (dt != cached_dt) {
                        cached_dt = dt;
                        cached_factor = std::exp(-dt / tau_leak_);
                    }
                    factor = cached_factor;
                }
                for (std::size_t o = 0; o < n_o; ++o) {
                    Cell& c = base[o * plane + pix];
                    c.value = c.value * factor + bank_->kernel(s, o).at(x - ex, y - ey);
                    c.last_t = t;
                }
            }
        }
    }
}

void S1Maps::refresh(double t_ms) {
    if (t_ms < clock_) throw DataError("s1: refresh before the latest delivered event");
    double cached_dt = -1.0, cached_factor = 1.0;
    for (auto& c : cells_) {
        const double dt = t_ms - c.last_t;
        if (dt != 0.0) {
            if (dt != cached_dt) {
                cached_dt = dt;
                cached_factor = std::exp(-dt / tau_leak_);
            }
            c.value *= cached_factor;
        }
        c.last_t = t_ms;
    }
    clock_ = t_ms;
    synchronized_ = true;
}

double S1Maps::value_at(std::size_t s, std::size_t o, int x, int y, double t_ms) const {
    const Cell& c = cell(s, o, x, y);
    if (t_ms < c.last_t) throw DataError("s1: query before the cell's last update");
    return c.value * std::exp(-(t_ms - c.last_t) / tau_leak_);
}

C1Maps c1_pool(const S1Maps& s1) {
    if (!s1.synchronized()) throw std::logic_error("c1_pool: S1 maps must be refreshed to a common time");
    const auto& bank = s1.bank();
    const int w = s1.width(), h = s1.height();
    C1Maps c1(bank.n_scales(), bank.n_orientations(), (w + 1) / 2, (h + 1) / 2);
    for (std::size_t s = 0; s < c1.n_scales; ++s) {
        for (std::size_t o = 0; o < c1.n_orientations; ++o) {
            for (int cy = 0; cy < c1.height; ++cy) {
                for (int cx = 0; cx < c1.width; ++cx) {
                    double m = s1.cell(s, o, 2 * cx, 2 * cy).value;
                    for (int y = 2 * cy; y < std::min(h, 2 * cy + 2); ++y) {
                        for (int x = 2 * cx; x < std::min(w, 2 * cx + 2); ++x) {
                            m = std::max(m, s1.cell(s, o, x, y).value);
                        }
                    }
                    c1.at(s, o, cx, cy) = m;
                }
            }
        }
    }
    return c1;
}

C1Maps extract_c1(const Segment& segment, const GaborBank& bank, int width, int height, double tau_leak_ms) {
    S1Maps s1(bank, width, height, tau_leak_ms);
    for (const auto& e : segment.events) s1.deliver(e);
    s1.refresh(std::max(segment.t_end_ms(), s1.clock()));
    return c1_pool(s1);
}

std::string c1_to_csv(const C1Maps& c1, const GaborParams& params) {
    std::ostringstream out;
    out.precision(17);
    for (std::size_t s = 0; s < c1.n_scales; ++s) {
        for (std::size_t o = 0; o < c1.n_orientations; ++o) {
            out << "# scale=" << params.scales[s] << " orientation=" << params.orientations_deg[o] << '\n';
            for (int y = 0; y < c1.height; ++y) {
                for (int x = 0; x < c1.width; ++x) out << (x ? "," : "") << c1.at(s, o, x, y);
                out << '\n';
            }
        }
    }
    return out.str();
}

std::string_view to_string(CodingKind kind) {
    return kind == CodingKind::log ? "log" : "linear";
}

CodingKind parse_coding_kind(std::string_view name) {
    if (name == "log") return CodingKind::log;
    if (name == "linear") return CodingKind::linear;
    throw UsageError("unknown coding kind '" + std::string(name) + "'");
}

CodingParams CodingParams::make(CodingKind kind, double r_max, double r_min, double t_w) {
    if (!(r_min > 0)) throw UsageError("coding.r_min must be positive");
    if (!(t_w > 0)) throw UsageError("coding.t_w_ms must be positive");
    if (!(r_max > r_min)) throw DegenerateError("coding: r_max must exceed r_min");
    CodingParams p;
    p.kind = kind;
    p.t_w = t_w;
    p.r_min = r_min;
    p.r_max = r_max;
    if (kind == CodingKind::log) {
        const double span = std::log(r_max) - std::log(r_min);
        p.u = t_w * std::log(r_max) / span;
        p.v = t_w / span;
    } else {
        p.u = t_w;
        p.v = t_w / r_max;
    }
    return p;
}

double CodingParams::code(double r) const {
    return kind == CodingKind::log ? u - v * std::log(r) : u - v * r;
}

double CodingParams::spike_time(double r) const {
    return std::clamp(code(r), 0.0, t_w);
}

CodingParams fit_coding(std::span<const double> responses, double r_min, double t_w, CodingKind kind) {
    double r_max = -std::numeric_limits<double>::infinity();
    for (double r : responses) {
        if (std::isnan(r)) throw DataError("coding: NaN response");
        r_max = std::max(r_max, r);
    }
    if (!(r_max > r_min)) {
        throw DegenerateError("coding: no response exceeds r_min = " + std::to_string(r_min));
    }
    return CodingParams::make(kind, r_max, r_min, t_w);
}

std::string_view to_string(FusionMode mode) {
    switch (mode) {
        case FusionMode::multiscale: return "multiscale";
        case FusionMode::multi_orientation: return "multi_orientation";
        case FusionMode::none: return "none";
        case FusionMode::full: return "full";
    }
    return "?";
}

FusionMode parse_fusion_mode(std::string_view name) {
    for (auto m : kFusionModes) {
        if (to_string(m) == name) return m;
    }
    throw UsageError("unknown fusion mode '" + std::string(name) + "'");
}

std::uint32_t address_count(FusionMode mode, std::size_t n_scales, std::size_t n_orientations, int c1_width,
                            int c1_height) {
    const auto cells = static_cast<std::size_t>(c1_width) * static_cast<std::size_t>(c1_height);
    switch (mode) {
        case FusionMode::multiscale: return static_cast<std::uint32_t>(n_orientations * cells);
        case FusionMode::multi_orientation: return static_cast<std::uint32_t>(n_scales * cells);
        case FusionMode::none: return static_cast<std::uint32_t>(n_scales * n_orientations * cells);
        case FusionMode::full: return static_cast<std::uint32_t>(cells);
    }
    return 0;
}

std::uint32_t fusion_address(FusionMode mode, std::size_t s, std::size_t o, int x, int y,
                             std::size_t n_orientations, int c1_width, int c1_height) {
    const auto cells = static_cast<std::size_t>(c1_width) * static_cast<std::size_t>(c1_height);
    const auto pix = static_cast<std::size_t>(y) * static_cast<std::size_t>(c1_width) + static_cast<std::size_t>(x);
    switch (mode) {
        case FusionMode::multiscale: return static_cast<std::uint32_t>(o * cells + pix);
        case FusionMode::multi_orientation: return static_cast<std::uint32_t>(s * cells + pix);
        case FusionMode::none: return static_cast<std::uint32_t>((s * n_orientations + o) * cells + pix);
        case FusionMode::full: return static_cast<std::uint32_t>(pix);
    }
    return 0;
}

SpikePattern encode(const C1Maps& c1, const CodingParams& params, FusionMode fusion) {
    SpikePattern p;
    p.fusion = fusion;
    p.t_w = params.t_w;
    p.n_addresses = address_count(fusion, c1.n_scales, c1.n_orientations, c1.width, c1.height);
    for (std::size_t s = 0; s < c1.n_scales; ++s) {
        for (std::size_t o = 0; o < c1.n_orientations; ++o) {
            for (int y = 0; y < c1.height; ++y) {
                for (int x = 0; x < c1.width; ++x) {
                    const double r = c1.at(s, o, x, y);
                    if (!(r > params.r_min)) continue;
                    p.spikes.push_back({fusion_address(fusion, s, o, x, y, c1.n_orientations, c1.width, c1.height),
                                        params.spike_time(r)});
                }
            }
        }
    }
    std::sort(p.spikes.begin(), p.spikes.end(), [](const Spike& a, const Spike& b) {
        return a.time_ms != b.time_ms ? a.time_ms < b.time_ms : a.address < b.address;
    });
    return p;
}

}  // namespace must
