#include "microtrain/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "microtrain/errors.hpp"
#include "microtrain/rng.hpp"

namespace microtrain::data {

namespace {

struct Point {
  double x, y;
};

Point bezier(const Point& p0, const Point& p1, const Point& p2,
             const Point& p3, double t) {
  const double u = 1.0 - t;
  const double b0 = u * u * u, b1 = 3 * u * u * t, b2 = 3 * u * t * t,
               b3 = t * t * t;
  return {b0 * p0.x + b1 * p1.x + b2 * p2.x + b3 * p3.x,
          b0 * p0.y + b1 * p1.y + b2 * p2.y + b3 * p3.y};
}

// Gaussian tube splat: each centerline point raises nearby pixels to
// max(current, A * exp(-r^2 / 2 sigma^2)), so self-overlap does not double
// the brightness.
void splat(Tensor& plane, int h, int w, double cx, double cy, double sigma,
           double amp) {
  const double reach = 3.0 * sigma;
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - reach)));
  const int y1 = std::min(h - 1, static_cast<int>(std::ceil(cy + reach)));
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - reach)));
  const int x1 = std::min(w - 1, static_cast<int>(std::ceil(cx + reach)));
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x - cx, dy = y - cy;
      const double v = amp * std::exp(-(dx * dx + dy * dy) * inv);
      double& px = plane[static_cast<long long>(y) * w + x];
      if (v > px) px = v;
    }
  }
}

void render_curve(Tensor& tube, int h, int w, const Point& p0, const Point& p1,
                  const Point& p2, const Point& p3, double sigma_base,
                  double amp, double wobble_amp, double wobble_freq,
                  double wobble_phase, bool stenosed, double sten_center,
                  double sten_half_len, double sten_depth) {
  const int m = 3 * std::max(h, w);
  for (int i = 0; i < m; ++i) {
    const double t = static_cast<double>(i) / (m - 1);
    const Point c = bezier(p0, p1, p2, p3, t);
    double width_mult =
        1.0 + wobble_amp * std::sin(2.0 * M_PI * (wobble_freq * t + wobble_phase));
    if (stenosed && std::abs(t - sten_center) <= sten_half_len) {
      const double u = (t - sten_center) / sten_half_len;  // in [-1,1]
      const double c2 = std::cos(0.5 * M_PI * u);
      width_mult *= 1.0 - sten_depth * c2 * c2;
    }
    splat(tube, h, w, c.x, c.y, sigma_base * width_mult, amp);
  }
}

Tensor render_vessel(Rng& rng, bool positive, Difficulty diff, int h, int w) {
  // Low-frequency background: coarse random grid, bilinearly upsampled.
  const int gh = 5, gw = 5;
  Tensor coarse({1, gh, gw});
  for (long long i = 0; i < coarse.size(); ++i)
    coarse[i] = 0.05 + 0.10 * rng.u01();
  Tensor bg = resample_bilinear(coarse, h, w);

  // Main vessel endpoints on opposite borders, interior control points
  // jittered off the straight line.
  const bool horizontal = rng.u01() < 0.5;
  Point p0, p3;
  if (horizontal) {
    p0 = {0.0, rng.uniform(0.15, 0.85) * (h - 1)};
    p3 = {static_cast<double>(w - 1), rng.uniform(0.15, 0.85) * (h - 1)};
  } else {
    p0 = {rng.uniform(0.15, 0.85) * (w - 1), 0.0};
    p3 = {rng.uniform(0.15, 0.85) * (w - 1), static_cast<double>(h - 1)};
  }
  const double jitter = 0.22 * std::min(h, w);
  Point p1 = {p0.x + (p3.x - p0.x) / 3.0 + rng.uniform(-jitter, jitter),
              p0.y + (p3.y - p0.y) / 3.0 + rng.uniform(-jitter, jitter)};
  Point p2 = {p0.x + 2.0 * (p3.x - p0.x) / 3.0 + rng.uniform(-jitter, jitter),
              p0.y + 2.0 * (p3.y - p0.y) / 3.0 + rng.uniform(-jitter, jitter)};

  const double sigma_base = rng.uniform(1.3, 1.9) * (std::min(h, w) / 32.0);
  const double amp = rng.uniform(0.55, 0.80);
  const double wobble_amp = diff == Difficulty::Easy ? 0.06 : 0.12;
  const double wobble_freq = rng.uniform(0.8, 1.6);
  const double wobble_phase = rng.u01();

  double sten_center = 0.0, sten_half = 0.0, sten_depth = 0.0;
  if (positive) {
    sten_center = rng.uniform(0.30, 0.70);
    sten_half = rng.uniform(0.08, 0.14);
    sten_depth = diff == Difficulty::Easy ? rng.uniform(0.40, 0.70)
                                          : rng.uniform(0.15, 0.35);
  }

  Tensor tube({1, h, w});
  render_curve(tube, h, w, p0, p1, p2, p3, sigma_base, amp, wobble_amp,
               wobble_freq, wobble_phase, positive, sten_center, sten_half,
               sten_depth);

  // Optional short side branch, class-independent clutter.
  if (rng.u01() < 0.5) {
    const double tb = rng.uniform(0.3, 0.7);
    const Point b0 = bezier(p0, p1, p2, p3, tb);
    Point b3;
    switch (rng.uniform_int(0, 3)) {
      case 0: b3 = {0.0, rng.u01() * (h - 1)}; break;
      case 1: b3 = {static_cast<double>(w - 1), rng.u01() * (h - 1)}; break;
      case 2: b3 = {rng.u01() * (w - 1), 0.0}; break;
      default: b3 = {rng.u01() * (w - 1), static_cast<double>(h - 1)}; break;
    }
    Point b1 = {b0.x + (b3.x - b0.x) / 3.0 + rng.uniform(-jitter, jitter),
                b0.y + (b3.y - b0.y) / 3.0 + rng.uniform(-jitter, jitter)};
    Point b2 = {b0.x + 2.0 * (b3.x - b0.x) / 3.0 + rng.uniform(-jitter, jitter),
                b0.y + 2.0 * (b3.y - b0.y) / 3.0 + rng.uniform(-jitter, jitter)};
    render_curve(tube, h, w, b0, b1, b2, b3, sigma_base * 0.55, amp * 0.8,
                 wobble_amp, wobble_freq, rng.u01(), false, 0, 0, 0);
  }

  Tensor img({1, h, w});
  for (long long i = 0; i < img.size(); ++i) {
    const double v = bg[i] + tube[i];
    img[i] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  }
  return img;
}

std::vector<Sample> make_split(const std::string& split_name, int n,
                               double positive_fraction, Difficulty diff,
                               int h, int w, uint64_t seed) {
  Rng rng(seed, "data/" + split_name);
  const int n_pos = static_cast<int>(std::llround(positive_fraction * n));
  std::vector<int> labels(static_cast<size_t>(n), 0);
  for (int i = 0; i < n_pos; ++i) labels[static_cast<size_t>(i)] = 1;
  // Fisher-Yates with the split stream so ordering is not class-sorted.
  for (int i = n - 1; i > 0; --i) {
    const int j = rng.uniform_int(0, i);
    std::swap(labels[static_cast<size_t>(i)], labels[static_cast<size_t>(j)]);
  }
  std::vector<Sample> out;
  out.reserve(static_cast<size_t>(n));
  char idbuf[64];
  for (int i = 0; i < n; ++i) {
    Sample s;
    s.label = labels[static_cast<size_t>(i)];
    s.image = render_vessel(rng, s.label == 1, diff, h, w);
    std::snprintf(idbuf, sizeof idbuf, "%s-%05d", split_name.c_str(), i);
    s.id = idbuf;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

void DatasetSpec::validate() const {
  if (n_train < 2 || n_val < 2 || n_test < 2)
    throw std::invalid_argument("data: split sizes must be >= 2");
  if (!(positive_fraction > 0.0 && positive_fraction < 1.0))
    throw std::invalid_argument("data: positive_fraction must be in (0,1)");
  if (!(label_noise >= 0.0 && label_noise < 0.5))
    throw std::invalid_argument("data: label_noise must be in [0, 0.5)");
  if (height < 16 || width < 16)
    throw std::invalid_argument("data: images must be at least 16x16");
}

Dataset generate(const DatasetSpec& spec) {
  spec.validate();
  Dataset ds;
  ds.train = make_split("train", spec.n_train, spec.positive_fraction,
                        spec.difficulty, spec.height, spec.width, spec.seed);
  ds.val = make_split("val", spec.n_val, spec.positive_fraction,
                      spec.difficulty, spec.height, spec.width, spec.seed);
  ds.test = make_split("test", spec.n_test, spec.positive_fraction,
                       spec.difficulty, spec.height, spec.width, spec.seed);
  if (spec.label_noise > 0.0) {
    Rng noise(spec.seed, "data/noise");
    for (Sample& s : ds.train)
      if (noise.u01() < spec.label_noise) s.label = 1 - s.label;
  }
  return ds;
}

std::vector<PretextSample> generate_pretext(int n, uint64_t seed, int h,
                                            int w) {
  if (n < 4)
    throw std::invalid_argument("pretext: need at least 4 samples");
  if (h != w)
    throw std::invalid_argument("pretext: rotation task needs square images");
  Rng rng(seed, "data/pretext");
  std::vector<PretextSample> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    PretextSample s;
    s.orientation = i % 4;  // balanced by construction
    Tensor base = render_vessel(rng, false, Difficulty::Easy, h, w);
    s.image = rot90(base, s.orientation);
    out.push_back(std::move(s));
  }
  return out;
}

Tensor rot90(const Tensor& img, int k) {
  if (img.rank() != 3 || img.extent(0) != 1)
    throw std::invalid_argument("rot90: expected [1 x H x W], got " +
                                shape_str(img.shape()));
  const int h = img.extent(1), w = img.extent(2);
  k = ((k % 4) + 4) % 4;
  if (k == 0) return img;
  if (k % 2 == 1 && h != w)
    throw std::invalid_argument("rot90: odd rotations need square images");
  Tensor out({1, k % 2 == 1 ? w : h, k % 2 == 1 ? h : w});
  for (int y = 0; y < img.extent(1); ++y) {
    for (int x = 0; x < img.extent(2); ++x) {
      const double v = img[static_cast<long long>(y) * w + x];
      int oy = 0, ox = 0;
      switch (k) {
        case 1: oy = w - 1 - x; ox = y; break;           // 90 CCW
        case 2: oy = h - 1 - y; ox = w - 1 - x; break;   // 180
        case 3: oy = x; ox = h - 1 - y; break;           // 270 CCW
      }
      out[static_cast<long long>(oy) * out.extent(2) + ox] = v;
    }
  }
  return out;
}

void write_pgm(const std::string& path, const Tensor& img) {
  if (img.rank() != 3 || img.extent(0) != 1)
    throw std::invalid_argument("pgm: expected [1 x H x W], got " +
                                shape_str(img.shape()));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("pgm: cannot open for write: " + path);
  const int h = img.extent(1), w = img.extent(2);
  out << "P5\n" << w << " " << h << "\n255\n";
  std::vector<unsigned char> row(static_cast<size_t>(w));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v = img[static_cast<long long>(y) * w + x];
      v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
      row[static_cast<size_t>(x)] =
          static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(row.data()), w);
  }
  if (!out) throw ConfigError("pgm: write failed: " + path);
}

namespace {

// Reads one whitespace-delimited token, skipping '#' comment lines.
std::string next_pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

Tensor read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("pgm: cannot open: " + path);
  const std::string magic = next_pgm_token(in);
  if (magic != "P5")
    throw ConfigError("pgm: bad magic '" + magic + "' in " + path);
  int w = 0, h = 0, maxval = 0;
  try {
    w = std::stoi(next_pgm_token(in));
    h = std::stoi(next_pgm_token(in));
    maxval = std::stoi(next_pgm_token(in));
  } catch (const std::exception&) {
    throw ConfigError("pgm: malformed header in " + path);
  }
  if (w < 1 || h < 1) throw ConfigError("pgm: bad dimensions in " + path);
  if (maxval != 255)
    throw ConfigError("pgm: only maxval 255 supported, got " +
                      std::to_string(maxval) + " in " + path);
  std::vector<unsigned char> raw(static_cast<size_t>(w) * h);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size()));
  if (!in) throw ConfigError("pgm: truncated pixel data in " + path);
  Tensor img({1, h, w});
  for (long long i = 0; i < img.size(); ++i)
    img[i] = raw[static_cast<size_t>(i)] / 255.0;
  return img;
}

Tensor resample_bilinear(const Tensor& img, int out_h, int out_w) {
  if (img.rank() != 3 || img.extent(0) != 1)
    throw std::invalid_argument("resample: expected [1 x H x W]");
  const int h = img.extent(1), w = img.extent(2);
  if (h == out_h && w == out_w) return img;
  Tensor out({1, out_h, out_w});
  const double sy = static_cast<double>(h) / out_h;
  const double sx = static_cast<double>(w) / out_w;
  for (int oy = 0; oy < out_h; ++oy) {
    const double fy = (oy + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    const double wy = fy - y0;
    int y1 = y0 + 1;
    y0 = std::clamp(y0, 0, h - 1);
    y1 = std::clamp(y1, 0, h - 1);
    for (int ox = 0; ox < out_w; ++ox) {
      const double fx = (ox + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      const double wx = fx - x0;
      int x1 = x0 + 1;
      x0 = std::clamp(x0, 0, w - 1);
      x1 = std::clamp(x1, 0, w - 1);
      const double v00 = img[static_cast<long long>(y0) * w + x0];
      const double v01 = img[static_cast<long long>(y0) * w + x1];
      const double v10 = img[static_cast<long long>(y1) * w + x0];
      const double v11 = img[static_cast<long long>(y1) * w + x1];
      out[static_cast<long long>(oy) * out_w + ox] =
          (1 - wy) * ((1 - wx) * v00 + wx * v01) +
          wy * ((1 - wx) * v10 + wx * v11);
    }
  }
  return out;
}

std::vector<Sample> load_directory(const std::string& dir,
                                   const std::string& manifest_path,
                                   int target_h, int target_w) {
  std::ifstream in(manifest_path);
  if (!in) throw ConfigError("manifest: cannot open: " + manifest_path);
  std::string line;
  if (!std::getline(in, line))
    throw ConfigError("manifest: empty file: " + manifest_path);
  if (line != "id,filename,label")
    throw ConfigError("manifest: bad header '" + line +
                      "' (expected id,filename,label) in " + manifest_path);
  std::vector<Sample> out;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string id, filename, label_s;
    if (!std::getline(ls, id, ',') || !std::getline(ls, filename, ',') ||
        !std::getline(ls, label_s))
      throw ConfigError("manifest: malformed row " + std::to_string(row) +
                        " in " + manifest_path);
    if (label_s != "0" && label_s != "1")
      throw ConfigError("manifest: row " + std::to_string(row) + " label '" +
                        label_s + "' not in {0,1}");
    Sample s;
    s.id = id;
    s.label = label_s == "1" ? 1 : 0;
    const std::string path = dir + "/" + filename;
    try {
      s.image = read_pgm(path);
    } catch (const ConfigError& e) {
      throw ConfigError("manifest: row " + std::to_string(row) + " (" +
                        filename + "): " + e.what());
    }
    if (s.image.extent(1) != target_h || s.image.extent(2) != target_w)
      s.image = resample_bilinear(s.image, target_h, target_w);
    out.push_back(std::move(s));
  }
  return out;
}

void write_split(const std::string& dir, const std::string& split_name,
                 const std::vector<Sample>& samples) {
  std::ofstream manifest(dir + "/manifest_" + split_name + ".csv");
  if (!manifest)
    throw ConfigError("cannot write manifest in " + dir);
  manifest << "id,filename,label\n";
  for (const Sample& s : samples) {
    const std::string filename = s.id + ".pgm";
    write_pgm(dir + "/" + filename, s.image);
    manifest << s.id << "," << filename << "," << s.label << "\n";
  }
  if (!manifest) throw ConfigError("manifest write failed in " + dir);
}

}  // namespace microtrain::data
