#include "p2s/phantom.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "p2s/rng.hpp"

namespace p2s {

namespace {

bool is_spd(const Tensor3& t) {
  // Sylvester's criterion on the leading principal minors.
  const double m1 = t.xx;
  const double m2 = t.xx * t.yy - t.xy * t.xy;
  const double m3 = t.xx * (t.yy * t.zz - t.yz * t.yz) -
                    t.xy * (t.xy * t.zz - t.yz * t.xz) +
                    t.xz * (t.xy * t.yz - t.yy * t.xz);
  return m1 > 0.0 && m2 > 0.0 && m3 > 0.0;
}

void validate_spec(const PhantomSpec& spec) {
  if (spec.dims.l == 0 || spec.dims.w == 0 || spec.dims.h == 0)
    throw Error(ErrorCode::bad_config, "phantom dims must be positive");
  if (spec.labels.empty())
    throw Error(ErrorCode::bad_config, "phantom needs at least one tissue label");
  for (const auto& label : spec.labels) {
    if (!is_spd(label.tensor))
      throw Error(ErrorCode::bad_config,
                  "diffusion tensor for '" + label.name +
                      "' is not symmetric positive definite");
    if (!(label.s0 > 0.0) || !std::isfinite(label.s0))
      throw Error(ErrorCode::bad_config,
                  "S0 for '" + label.name + "' must be positive");
  }
  for (const auto& region : spec.regions) {
    if (region.label >= spec.labels.size())
      throw Error(ErrorCode::bad_config, "region references an unknown label");
    for (double r : region.radii)
      if (!(r > 0.0))
        throw Error(ErrorCode::bad_config, "region radii must be positive");
  }
  for (const auto& g : spec.gradients) {
    if (!(g.b >= 0.0) || !std::isfinite(g.b))
      throw Error(ErrorCode::bad_config, "b-values must be finite and >= 0");
    if (g.b > 0.0) {
      const double norm = std::sqrt(g.dir[0] * g.dir[0] + g.dir[1] * g.dir[1] +
                                    g.dir[2] * g.dir[2]);
      if (std::abs(norm - 1.0) > 1e-6)
        throw Error(ErrorCode::bad_config,
                    "gradient directions must have unit norm when b > 0");
    }
  }
}

}  // namespace

LabelMap rasterize_regions(const PhantomSpec& spec) {
  validate_spec(spec);
  LabelMap map{spec.dims,
               std::vector<std::size_t>(spec.dims.voxels(), LabelMap::npos)};
  std::size_t voxel = 0;
  for (std::size_t z = 0; z < spec.dims.h; ++z)
    for (std::size_t y = 0; y < spec.dims.w; ++y)
      for (std::size_t x = 0; x < spec.dims.l; ++x, ++voxel) {
        const double px = static_cast<double>(x);
        const double py = static_cast<double>(y);
        const double pz = static_cast<double>(z);
        for (const auto& region : spec.regions) {
          const double dx = px - region.center[0];
          const double dy = py - region.center[1];
          const double dz = pz - region.center[2];
          bool inside;
          if (region.shape == Region::Shape::ellipsoid) {
            const double q = dx * dx / (region.radii[0] * region.radii[0]) +
                             dy * dy / (region.radii[1] * region.radii[1]) +
                             dz * dz / (region.radii[2] * region.radii[2]);
            inside = q <= 1.0;
          } else {
            inside = std::abs(dx) <= region.radii[0] &&
                     std::abs(dy) <= region.radii[1] &&
                     std::abs(dz) <= region.radii[2];
          }
          if (inside) map.labels[voxel] = region.label;
        }
      }
  return map;
}

Volume4D clean_signal(const PhantomSpec& spec) {
  const LabelMap map = rasterize_regions(spec);
  const std::size_t n = spec.gradients.size();
  if (n == 0)
    throw Error(ErrorCode::bad_config, "phantom needs at least one gradient entry");

  // Signal is constant per (label, volume) pair, so evaluate the decay once.
  std::vector<double> table(spec.labels.size() * n);
  for (std::size_t li = 0; li < spec.labels.size(); ++li)
    for (std::size_t t = 0; t < n; ++t) {
      const auto& g = spec.gradients[t];
      const double decay =
          g.b > 0.0 ? std::exp(-g.b * spec.labels[li].tensor.quadratic_form(g.dir))
                    : 1.0;
      table[li * n + t] = spec.labels[li].s0 * decay;
    }

  const std::size_t voxels = spec.dims.voxels();
  std::vector<double> data(voxels * n, 0.0);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t v = 0; v < voxels; ++v)
      if (map.labels[v] != LabelMap::npos)
        data[t * voxels + v] = table[map.labels[v] * n + t];

  return Volume4D({spec.dims.l, spec.dims.w, spec.dims.h, n}, spec.spacing,
                  std::move(data));
}

Mask3D tissue_mask(const PhantomSpec& spec) {
  const LabelMap map = rasterize_regions(spec);
  std::vector<std::uint8_t> flags(map.labels.size());
  for (std::size_t v = 0; v < map.labels.size(); ++v)
    flags[v] = map.is_tissue(v) ? 1 : 0;
  return Mask3D(spec.dims, std::move(flags));
}

double mean_tissue_b0(const Volume4D& clean, const PhantomSpec& spec) {
  if (clean.dims().spatial() != spec.dims ||
      clean.dims().n != spec.gradients.size())
    throw Error(ErrorCode::bad_dimensions, "clean volume does not match the spec");
  const LabelMap map = rasterize_regions(spec);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < spec.gradients.size(); ++t) {
    if (spec.gradients[t].b > 0.0) continue;
    for (std::size_t v = 0; v < clean.voxels(); ++v)
      if (map.is_tissue(v)) {
        sum += clean.at_linear(v, t);
        ++count;
      }
  }
  if (count == 0)
    throw Error(ErrorCode::bad_config,
                "SNR reference needs tissue voxels and a b=0 volume");
  return sum / static_cast<double>(count);
}

double resolve_sigma(const Volume4D& clean, const PhantomSpec& spec,
                     const NoiseSpec& noise) {
  if (!noise.snr_target) return noise.sigma;
  if (!(*noise.snr_target > 0.0))
    throw Error(ErrorCode::bad_config, "snr_target must be positive");
  return mean_tissue_b0(clean, spec) / *noise.snr_target;
}

Volume4D apply_noise(const Volume4D& clean, const NoiseSpec& noise,
                     std::uint64_t seed) {
  if (noise.channels < 1)
    throw Error(ErrorCode::bad_config, "channel count must be >= 1");
  if (!(noise.sigma >= 0.0) || !std::isfinite(noise.sigma))
    throw Error(ErrorCode::bad_config, "sigma must be finite and >= 0");
  if (noise.snr_target)
    throw Error(ErrorCode::bad_argument,
                "resolve snr_target to a sigma before applying noise");
  if (noise.sigma == 0.0) return clean;

  const double sigma = noise.sigma;
  const double inv_sqrt_c = 1.0 / std::sqrt(static_cast<double>(noise.channels));
  const std::size_t voxels = clean.voxels();
  const std::size_t n = clean.dims().n;
  std::vector<double> data(voxels * n);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t v = 0; v < voxels; ++v) {
      const double base = clean.at_linear(v, t) * inv_sqrt_c;
      double acc = 0.0;
      for (std::uint32_t c = 0; c < noise.channels; ++c) {
        double z_re, z_im;
        rng::normal_pair(seed, v, static_cast<std::uint32_t>(t), c, z_re, z_im);
        const double re = base + sigma * z_re;
        const double im = sigma * z_im;
        acc += re * re + im * im;
      }
      data[t * voxels + v] = std::sqrt(acc);
    }
  return Volume4D(clean.dims(), clean.spacing(), std::move(data));
}

std::vector<std::array<double, 3>> fibonacci_directions(std::size_t count) {
  constexpr double golden_angle = 2.39996322972865332;  // pi * (3 - sqrt(5))
  std::vector<std::array<double, 3>> dirs(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double z =
        1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(count);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden_angle * static_cast<double>(i);
    std::array<double, 3> d{r * std::cos(phi), r * std::sin(phi), z};
    const double norm = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    for (double& x : d) x /= norm;
    dirs[i] = d;
  }
  return dirs;
}

PhantomSpec default_phantom_spec(std::size_t volumes, std::uint64_t seed) {
  if (volumes < 3)
    throw Error(ErrorCode::bad_argument,
                "the stock phantom needs at least 3 volumes (2 b=0 + gradients)");
  PhantomSpec spec;
  spec.dims = {24, 24, 24};
  spec.spacing = {2.0, 2.0, 2.0};
  spec.seed = seed;
  spec.labels = {
      {"cortex", Tensor3::isotropic(0.8e-3), 98.0},
      {"fiber-x", {1.1e-3, 0.6e-3, 0.6e-3, 0, 0, 0}, 104.0},
      {"fiber-y", {0.6e-3, 1.1e-3, 0.6e-3, 0, 0, 0}, 100.0},
      {"fiber-z", {0.6e-3, 0.6e-3, 1.1e-3, 0, 0, 0}, 102.0},
  };
  spec.regions = {
      {Region::Shape::ellipsoid, {11.5, 11.5, 11.5}, {10.5, 10.5, 10.5}, 0},
      {Region::Shape::box, {11.5, 11.5, 6.5}, {6.5, 6.5, 2.0}, 1},
      {Region::Shape::box, {11.5, 11.5, 11.5}, {6.5, 6.5, 2.0}, 2},
      {Region::Shape::box, {11.5, 11.5, 16.5}, {6.5, 6.5, 2.0}, 3},
  };
  spec.gradients.resize(volumes);
  spec.gradients[0] = {0.0, {0, 0, 0}};
  spec.gradients[1] = {0.0, {0, 0, 0}};
  const auto dirs = fibonacci_directions(volumes - 2);
  for (std::size_t i = 0; i + 2 < volumes; ++i)
    spec.gradients[i + 2] = {1000.0, dirs[i]};
  return spec;
}

PhantomSpec load_phantom_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::io_open, "phantom spec: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::bad_config,
                "phantom spec is not valid JSON: " + std::string(e.what()));
  }
  PhantomSpec spec;
  try {
    const auto dims = doc.at("dims");
    spec.dims = {dims.at(0).get<std::size_t>(), dims.at(1).get<std::size_t>(),
                 dims.at(2).get<std::size_t>()};
    if (doc.contains("spacing")) {
      const auto sp = doc.at("spacing");
      spec.spacing = {sp.at(0).get<double>(), sp.at(1).get<double>(),
                      sp.at(2).get<double>()};
    }
    spec.seed = doc.value("seed", std::uint64_t{0});
    for (const auto& l : doc.at("labels")) {
      TissueLabel label;
      label.name = l.value("name", "");
      label.s0 = l.at("s0").get<double>();
      const auto t = l.at("tensor");
      label.tensor = {t.at(0).get<double>(), t.at(1).get<double>(),
                      t.at(2).get<double>(), t.at(3).get<double>(),
                      t.at(4).get<double>(), t.at(5).get<double>()};
      spec.labels.push_back(label);
    }
    for (const auto& r : doc.at("regions")) {
      Region region;
      const std::string shape = r.at("shape").get<std::string>();
      if (shape == "ellipsoid")
        region.shape = Region::Shape::ellipsoid;
      else if (shape == "box")
        region.shape = Region::Shape::box;
      else
        throw Error(ErrorCode::bad_config, "unknown region shape: " + shape);
      const auto c = r.at("center");
      region.center = {c.at(0).get<double>(), c.at(1).get<double>(),
                       c.at(2).get<double>()};
      const auto rad = r.at("radii");
      region.radii = {rad.at(0).get<double>(), rad.at(1).get<double>(),
                      rad.at(2).get<double>()};
      region.label = r.at("label").get<std::size_t>();
      spec.regions.push_back(region);
    }
    for (const auto& g : doc.at("gradients")) {
      GradientEntry entry;
      entry.b = g.at("b").get<double>();
      if (g.contains("dir")) {
        const auto d = g.at("dir");
        entry.dir = {d.at(0).get<double>(), d.at(1).get<double>(),
                     d.at(2).get<double>()};
      }
      spec.gradients.push_back(entry);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::bad_config,
                "phantom spec is missing or mistypes a field: " +
                    std::string(e.what()));
  }
  validate_spec(spec);
  return spec;
}

void save_phantom_spec(const PhantomSpec& spec, const std::string& path) {
  nlohmann::json doc;
  doc["dims"] = {spec.dims.l, spec.dims.w, spec.dims.h};
  doc["spacing"] = {spec.spacing.dx, spec.spacing.dy, spec.spacing.dz};
  doc["seed"] = spec.seed;
  doc["labels"] = nlohmann::json::array();
  for (const auto& l : spec.labels) {
    const auto& t = l.tensor;
    doc["labels"].push_back({{"name", l.name},
                             {"s0", l.s0},
                             {"tensor", {t.xx, t.yy, t.zz, t.xy, t.xz, t.yz}}});
  }
  doc["regions"] = nlohmann::json::array();
  for (const auto& r : spec.regions) {
    doc["regions"].push_back(
        {{"shape", r.shape == Region::Shape::ellipsoid ? "ellipsoid" : "box"},
         {"center", {r.center[0], r.center[1], r.center[2]}},
         {"radii", {r.radii[0], r.radii[1], r.radii[2]}},
         {"label", r.label}});
  }
  doc["gradients"] = nlohmann::json::array();
  for (const auto& g : spec.gradients) {
    doc["gradients"].push_back(
        {{"b", g.b}, {"dir", {g.dir[0], g.dir[1], g.dir[2]}}});
  }
  std::ofstream out(path);
  if (!out)
    throw Error(ErrorCode::io_write, "cannot write phantom spec: " + path);
  out << doc.dump(2) << '\n';
  if (!out)
    throw Error(ErrorCode::io_write, "failed writing phantom spec: " + path);
}

}  // namespace p2s
