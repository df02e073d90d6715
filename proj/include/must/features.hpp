#pragma once

#include "must/event_io.hpp"
#include "must/segmentation.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace must {

// ---------------------------------------------------------------------------
// Gabor filters
// ---------------------------------------------------------------------------

/// Filter bank parameters, one sigma/lambda per scale.
struct GaborParams {
    std::vector<int> scales{3, 5, 7, 9};
    std::vector<double> sigmas{1.2, 2.0, 2.8, 3.6};
    std::vector<double> lambdas{1.5, 2.5, 3.5, 4.6};
    std::vector<double> orientations_deg{0.0, 45.0, 90.0, 135.0};
    double gamma = 0.3;

    void validate() const;
};

/// G(dx, dy) = exp(-(X^2 + gamma^2 Y^2) / (2 sigma^2)) cos(2 pi X / lambda)
/// with X = dx cos(theta) + dy sin(theta), Y = -dx sin(theta) + dy cos(theta).
double gabor_value(int dx, int dy, double theta_rad, double gamma, double sigma, double lambda);

/// (2r+1) x (2r+1) coefficients, row-major over dy then dx.
class GaborKernel {
public:
    GaborKernel(int radius, std::vector<double> coefficients);

    int radius() const { return radius_; }
    int side() const { return 2 * radius_ + 1; }
    double at(int dx, int dy) const { return coef_[static_cast<std::size_t>((dy + radius_) * side() + dx + radius_)]; }
    std::span<const double> coefficients() const { return coef_; }

private:
    int radius_;
    std::vector<double> coef_;
};

GaborKernel gabor_kernel(int scale, double theta_rad, double gamma, double sigma, double lambda);

class GaborBank {
public:
    explicit GaborBank(GaborParams params = {});

    std::size_t n_scales() const { return params_.scales.size(); }
    std::size_t n_orientations() const { return params_.orientations_deg.size(); }
    const GaborKernel& kernel(std::size_t scale_index, std::size_t orientation_index) const {
        return kernels_[scale_index * n_orientations() + orientation_index];
    }
    const GaborParams& params() const { return params_; }

private:
    GaborParams params_;
    std::vector<GaborKernel> kernels_;
};

// ---------------------------------------------------------------------------
// S1 / C1 feature maps
// ---------------------------------------------------------------------------

/// Event-driven S1 layer. Every (scale, orientation) map holds one cell per
/// pixel with a lazily decayed response: a cell stores its value as of
/// `last_t` and decays with tau_leak only when touched or refreshed.
class S1Maps {
public:
    struct Cell {
        double value = 0.0;
        double last_t = 0.0;  // ms
    };

    S1Maps(const GaborBank& bank, int width, int height, double tau_leak_ms);

    /// Adds the kernel of every map centered on the event; contributions that
    /// fall outside the sensor are dropped. Throws DataError when the event
    /// precedes an already delivered one or lies outside the sensor.
    void deliver(const Event& event);

    /// Decays every cell to `t_ms`; afterwards stored values are current.
    void refresh(double t_ms);

    /// Response at time t_ms >= last_t of the cell, without mutating.
    double value_at(std::size_t s, std::size_t o, int x, int y, double t_ms) const;
    const Cell& cell(std::size_t s, std::size_t o, int x, int y) const { return cells_[index(s, o, x, y)]; }

    int width() const { return width_; }
    int height() const { return height_; }
    double tau_leak() const { return tau_leak_; }
    const GaborBank& bank() const { return *bank_; }
    /// Latest event or refresh time seen.
    double clock() const { return clock_; }
    /// True when every cell's last_t equals clock().
    bool synchronized() const { return synchronized_; }

private:
    std::size_t index(std::size_t s, std::size_t o, int x, int y) const {
        return ((s * bank_->n_orientations() + o) * static_cast<std::size_t>(height_) + static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    const GaborBank* bank_;
    int width_;
    int height_;
    double tau_leak_;
    double clock_ = 0.0;
    bool synchronized_ = true;
    bool any_event_ = false;
    std::vector<Cell> cells_;
};

/// C1 responses: 2x2 max pooling of S1, ceil(W/2) x ceil(H/2) per map.
struct C1Maps {
    std::size_t n_scales = 0;
    std::size_t n_orientations = 0;
    int width = 0;
    int height = 0;
    std::vector<double> values;

    C1Maps() = default;
    C1Maps(std::size_t scales, std::size_t orientations, int w, int h)
        : n_scales(scales), n_orientations(orientations), width(w), height(h),
          values(scales * orientations * static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0.0) {}

    std::size_t map_size() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
    double& at(std::size_t s, std::size_t o, int x, int y) { return values[offset(s, o, x, y)]; }
    double at(std::size_t s, std::size_t o, int x, int y) const { return values[offset(s, o, x, y)]; }
    /// One (scale, orientation) map as a contiguous row-major vector.
    std::span<const double> map(std::size_t s, std::size_t o) const {
        return std::span<const double>(values).subspan((s * n_orientations + o) * map_size(), map_size());
    }

private:
    std::size_t offset(std::size_t s, std::size_t o, int x, int y) const {
        return (s * n_orientations + o) * map_size() + static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
               static_cast<std::size_t>(x);
    }
};

/// Requires s1.synchronized(); throws std::logic_error otherwise.
C1Maps c1_pool(const S1Maps& s1);

/// Fresh S1 maps, all segment events delivered, refreshed to the segment end
/// time and pooled.
C1Maps extract_c1(const Segment& segment, const GaborBank& bank, int width, int height, double tau_leak_ms);

/// Writes each C1 map as a CSV grid section headed "# scale=<s> orientation=<deg>".
std::string c1_to_csv(const C1Maps& c1, const GaborParams& params);

// ---------------------------------------------------------------------------
// Latency coding and fusion
// ---------------------------------------------------------------------------

enum class CodingKind { log, linear };

std::string_view to_string(CodingKind kind);
CodingKind parse_coding_kind(std::string_view name);

/// Response-to-latency mapping over a window of t_w ms.
///   log:    t = u - v ln r,  u = t_w ln r_max / ln(r_max / r_min),  v = t_w / ln(r_max / r_min)
///   linear: t = t_w - (t_w / r_max) r
struct CodingParams {
    CodingKind kind = CodingKind::log;
    double t_w = 500.0;
    double r_min = 0.2;
    double r_max = 1.0;
    double u = 0.0;
    double v = 0.0;

    static CodingParams make(CodingKind kind, double r_max, double r_min, double t_w);

    /// The raw coding function, without clamping or the r_min cut.
    double code(double r) const;
    /// Spike time for an emitted response (r > r_min): code(r) clamped to [0, t_w].
    double spike_time(double r) const;
};

/// r_max is the largest response; throws DegenerateError when no response
/// exceeds r_min.
CodingParams fit_coding(std::span<const double> responses, double r_min, double t_w,
                        CodingKind kind = CodingKind::log);

enum class FusionMode { multiscale, multi_orientation, none, full };

inline constexpr FusionMode kFusionModes[] = {FusionMode::multiscale, FusionMode::multi_orientation, FusionMode::none,
                                             FusionMode::full};

std::string_view to_string(FusionMode mode);
FusionMode parse_fusion_mode(std::string_view name);

struct Spike {
    std::uint32_t address = 0;
    double time_ms = 0.0;

    friend bool operator==(const Spike&, const Spike&) = default;
};

/// Addressed spike trains within [0, t_w]; spikes sorted by (time, address).
struct SpikePattern {
    std::vector<Spike> spikes;
    std::uint32_t n_addresses = 0;
    FusionMode fusion = FusionMode::multiscale;
    double t_w = 500.0;
};

/// Number of encoding neurons for a C1 geometry:
///   multiscale n_o*W*H, multi_orientation n_s*W*H, none n_s*n_o*W*H, full W*H.
std::uint32_t address_count(FusionMode mode, std::size_t n_scales, std::size_t n_orientations, int c1_width,
                            int c1_height);

/// Encoding neuron of the C1 cell (s, o, x, y).
std::uint32_t fusion_address(FusionMode mode, std::size_t s, std::size_t o, int x, int y,
                             std::size_t n_orientations, int c1_width, int c1_height);

/// Every C1 response above r_min becomes one spike at params.spike_time(r).
SpikePattern encode(const C1Maps& c1, const CodingParams& params, FusionMode fusion);

}  // namespace must
