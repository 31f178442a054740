#include "ivise/color.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "ivise/error.hpp"

namespace ivise::color {

double distance(RgbF a, RgbF b) {
  return std::sqrt((a.r - b.r) * (a.r - b.r) + (a.g - b.g) * (a.g - b.g) + (a.b - b.b) * (a.b - b.b));
}

namespace {

double squared(RgbF a, RgbF b) {
  return (a.r - b.r) * (a.r - b.r) + (a.g - b.g) * (a.g - b.g) + (a.b - b.b) * (a.b - b.b);
}

std::size_t nearest(RgbF p, std::span<const RgbF> centers) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double d = squared(p, centers[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

struct Partition {
  std::vector<RgbF> centers;
  std::vector<std::size_t> assignment;
  double sse = 0.0;
};

// Greedy k-means++: each new center is the best of 2 + ln(k) D^2-weighted
// candidates.
std::vector<RgbF> seed_centers(std::span<const RgbF> points, int k, std::mt19937_64& rng) {
  const auto n = points.size();
  std::vector<RgbF> centers;
  centers.reserve(static_cast<std::size_t>(k));
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  centers.push_back(points[pick(rng)]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared(points[i], centers[0]);

  const int trials = 2 + static_cast<int>(std::log(double(k)));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (static_cast<int>(centers.size()) < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t chosen = pick(rng);
    if (total > 0.0) {
      double best_potential = std::numeric_limits<double>::infinity();
      for (int t = 0; t < trials; ++t) {
        double target = unit(rng) * total;
        std::size_t idx = 0;
        for (; idx + 1 < n; ++idx) {
          target -= d2[idx];
          if (target < 0.0) break;
        }
        double potential = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          potential += std::min(d2[i], squared(points[i], points[idx]));
        }
        if (potential < best_potential) {
          best_potential = potential;
          chosen = idx;
        }
      }
    }
    centers.push_back(points[chosen]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared(points[i], centers.back()));
  }
  return centers;
}

std::vector<RgbF> exact_means(std::span<const Rgb> pixels, std::span<const std::size_t> assignment,
                              std::size_t k, std::vector<std::size_t>& counts) {
  std::vector<std::array<std::uint64_t, 3>> sums(k, {0, 0, 0});
  counts.assign(k, 0);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    auto& s = sums[assignment[i]];
    s[0] += pixels[i].r;
    s[1] += pixels[i].g;
    s[2] += pixels[i].b;
    ++counts[assignment[i]];
  }
  std::vector<RgbF> means(k);
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    const double n = static_cast<double>(counts[c]);
    means[c] = {sums[c][0] / n, sums[c][1] / n, sums[c][2] / n};
  }
  return means;
}

Partition lloyd(std::span<const Rgb> pixels, std::span<const RgbF> points, int k,
                std::mt19937_64& rng, const ClusterOptions& options) {
  Partition part;
  part.centers = seed_centers(points, k, rng);
  part.assignment.assign(points.size(), 0);
  std::vector<std::size_t> counts;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      part.assignment[i] = nearest(points[i], part.centers);
    }
    auto means = exact_means(pixels, part.assignment, part.centers.size(), counts);
    double movement = 0.0;
    for (std::size_t c = 0; c < part.centers.size(); ++c) {
      if (counts[c] == 0) continue;  // empty cluster keeps its center
      movement = std::max({movement, std::abs(means[c].r - part.centers[c].r),
                           std::abs(means[c].g - part.centers[c].g),
                           std::abs(means[c].b - part.centers[c].b)});
      part.centers[c] = means[c];
    }
    if (movement < options.convergence) break;
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    part.assignment[i] = nearest(points[i], part.centers);
  }
  auto means = exact_means(pixels, part.assignment, part.centers.size(), counts);
  part.sse = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    part.sse += squared(points[i], means[part.assignment[i]]);
  }
  return part;
}

PaletteEntry entry(std::string name, int r, int g, int b) {
  return {std::move(name), Rgb{std::uint8_t(r), std::uint8_t(g), std::uint8_t(b)}};
}

void validate_dictionary(const ColorDictionary& dict) {
  std::set<std::string> seen;
  for (const auto& e : dict.entries()) {
    if (e.name.empty() || !seen.insert(e.name).second) {
      throw Error(ErrorKind::InvalidArgument, "palette names must be unique and non-empty",
                  e.name);
    }
  }
  if (dict.fallback_name() && seen.contains(*dict.fallback_name())) {
    throw Error(ErrorKind::InvalidArgument, "fallback name duplicates an anchor",
                *dict.fallback_name());
  }
  auto require_names = [&](std::set<std::string> expected) {
    if (seen != expected) {
      throw Error(ErrorKind::InvalidArgument,
                  "palette " + std::string(to_string(dict.kind())) + " has the wrong color names");
    }
  };
  switch (dict.kind()) {
    case PaletteKind::Clothing24:
      if (dict.entries().size() != 24) {
        throw Error(ErrorKind::InvalidArgument, "clothing palette needs exactly 24 entries",
                    std::to_string(dict.entries().size()));
      }
      break;
    case PaletteKind::Skin:
      require_names({"white", "black"});
      break;
    case PaletteKind::Hair:
      require_names({"black", "brown", "blond", "red"});
      if (dict.fallback_name() != "other") {
        throw Error(ErrorKind::InvalidArgument, "hair palette needs the 'other' fallback");
      }
      break;
  }
}

}  // namespace

std::string_view to_string(PaletteKind kind) {
  switch (kind) {
    case PaletteKind::Clothing24: return "clothing24";
    case PaletteKind::Skin: return "skin";
    case PaletteKind::Hair: return "hair";
  }
  return "unknown";
}

std::optional<PaletteKind> parse_palette_kind(std::string_view text) {
  if (text == "clothing24") return PaletteKind::Clothing24;
  if (text == "skin") return PaletteKind::Skin;
  if (text == "hair") return PaletteKind::Hair;
  return std::nullopt;
}

ColorDictionary::ColorDictionary(PaletteKind kind, std::vector<PaletteEntry> entries,
                                 std::optional<std::string> fallback_name,
                                 double fallback_distance)
    : kind_(kind),
      entries_(std::move(entries)),
      fallback_name_(std::move(fallback_name)),
      fallback_distance_(fallback_distance) {
  if (entries_.empty()) throw Error(ErrorKind::InvalidArgument, "palette has no entries");
  validate_dictionary(*this);
}

std::vector<std::string> ColorDictionary::names() const {
  std::vector<std::string> out;
  for (const auto& e : entries_) out.push_back(e.name);
  if (fallback_name_) out.push_back(*fallback_name_);
  return out;
}

bool ColorDictionary::contains(std::string_view name) const {
  if (fallback_name_ && *fallback_name_ == name) return true;
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const PaletteEntry& e) { return e.name == name; });
}

ColorDictionary default_clothing_palette() {
  return ColorDictionary(PaletteKind::Clothing24,
                         {
                             entry("red", 255, 0, 0),
                             entry("orange", 255, 165, 0),
                             entry("yellow", 255, 255, 0),
                             entry("green", 0, 128, 0),
                             entry("cyan", 0, 255, 255),
                             entry("blue", 0, 0, 255),
                             entry("purple", 128, 0, 128),
                             entry("pink", 255, 192, 203),
                             entry("brown", 139, 69, 19),
                             entry("grey", 128, 128, 128),
                             entry("black", 0, 0, 0),
                             entry("white", 255, 255, 255),
                             entry("dark-red", 128, 0, 0),
                             entry("dark-orange", 200, 85, 0),
                             entry("dark-yellow", 160, 140, 0),
                             entry("dark-green", 0, 70, 0),
                             entry("dark-blue", 0, 0, 128),
                             entry("dark-grey", 64, 64, 64),
                             entry("light-green", 144, 238, 144),
                             entry("light-blue", 173, 216, 230),
                             entry("light-purple", 200, 160, 230),
                             entry("light-grey", 192, 192, 192),
                             entry("light-yellow", 255, 255, 180),
                             entry("light-brown", 196, 150, 100),
                         });
}

ColorDictionary default_skin_palette() {
  return ColorDictionary(PaletteKind::Skin, {entry("white", 235, 210, 190), entry("black", 90, 60, 45)});
}

ColorDictionary default_hair_palette(double other_distance) {
  return ColorDictionary(PaletteKind::Hair,
                         {
                             entry("black", 20, 20, 20),
                             entry("brown", 110, 70, 40),
                             entry("blond", 225, 195, 130),
                             entry("red", 165, 60, 35),
                         },
                         "other", other_distance);
}

ColorDictionary parse_palette(std::string_view text, double hair_other_distance) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::optional<PaletteKind> kind;
  std::vector<PaletteEntry> entries;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto fields = split_whitespace(body);
    const auto where = "palette line " + std::to_string(line_no) + ": ";
    if (!kind) {
      if (fields.size() != 3 || fields[0] != "ivise-palette" || fields[1] != "v1") {
        throw Error(ErrorKind::ParseError, where + "expected 'ivise-palette v1 <kind>'", "header");
      }
      kind = parse_palette_kind(fields[2]);
      if (!kind) throw Error(ErrorKind::ParseError, where + "unknown palette kind", std::string(fields[2]));
      continue;
    }
    if (fields.size() != 4) throw Error(ErrorKind::ParseError, where + "expected 'name r g b'");
    int rgb[3];
    for (int c = 0; c < 3; ++c) {
      const auto f = fields[1 + c];
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), rgb[c]);
      if (ec != std::errc() || ptr != f.data() + f.size() || rgb[c] < 0 || rgb[c] > 255) {
        throw Error(ErrorKind::ParseError, where + "channel must be 0-255", std::string(f));
      }
    }
    entries.push_back(entry(std::string(fields[0]), rgb[0], rgb[1], rgb[2]));
  }
  if (!kind) throw Error(ErrorKind::ParseError, "empty palette file");
  try {
    if (*kind == PaletteKind::Hair) {
      return ColorDictionary(*kind, std::move(entries), "other", hair_other_distance);
    }
    return ColorDictionary(*kind, std::move(entries));
  } catch (const Error& e) {
    throw Error(ErrorKind::ParseError, e.what(), e.detail());
  }
}

ColorDictionary load_palette(const std::filesystem::path& path, double hair_other_distance) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open palette " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_palette(ss.str(), hair_other_distance);
}

std::string format_palette(const ColorDictionary& dictionary) {
  std::string out = "ivise-palette v1 " + std::string(to_string(dictionary.kind())) + "\n";
  for (const auto& e : dictionary.entries()) {
    out += e.name + " " + std::to_string(e.anchor.r) + " " + std::to_string(e.anchor.g) + " " +
           std::to_string(e.anchor.b) + "\n";
  }
  return out;
}

const ColorDictionary& PaletteSet::for_section(Section section) const {
  switch (section) {
    case Section::Face: return skin;
    case Section::Hair: return hair;
    default: return clothing;
  }
}

PaletteSet PaletteSet::from_config(const Config& config) {
  PaletteSet set;
  const double other = config.get_double("color.hair_other_distance", kDefaultHairOtherDistance);
  if (auto p = config.get("palette.clothing")) set.clothing = load_palette(*p, other);
  if (auto p = config.get("palette.skin")) set.skin = load_palette(*p, other);
  if (auto p = config.get("palette.hair")) {
    set.hair = load_palette(*p, other);
  } else {
    set.hair = default_hair_palette(other);
  }
  if (set.clothing.kind() != PaletteKind::Clothing24 || set.skin.kind() != PaletteKind::Skin ||
      set.hair.kind() != PaletteKind::Hair) {
    throw Error(ErrorKind::InvalidArgument, "palette file kind does not match its config key");
  }
  return set;
}

std::vector<ColorCluster> cluster_pixels(std::span<const Rgb> pixels, Section section, int k,
                                         std::uint64_t seed, const ClusterOptions& options) {
  if (pixels.empty()) throw Error(ErrorKind::EmptyRegion, "region has no pixels");
  if (k < 1) throw Error(ErrorKind::InvalidArgument, "k must be >= 1", std::to_string(k));
  if (static_cast<std::size_t>(k) > pixels.size()) {
    throw Error(ErrorKind::KTooLarge,
                "k=" + std::to_string(k) + " exceeds pixel count " + std::to_string(pixels.size()),
                std::to_string(k));
  }

  std::vector<RgbF> points(pixels.size());
  std::transform(pixels.begin(), pixels.end(), points.begin(), to_float);

  Partition best;
  best.sse = std::numeric_limits<double>::infinity();
  const int restarts = k == 1 ? 1 : std::max(1, options.restarts);
  for (int r = 0; r < restarts; ++r) {
    std::mt19937_64 rng(seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(r));
    auto part = lloyd(pixels, points, k, rng, options);
    if (part.sse < best.sse) best = std::move(part);
  }

  // Drop small clusters as outliers, hand their members to the nearest
  // survivor, then recompute the survivors' means once.
  const auto n = pixels.size();
  std::vector<std::size_t> counts;
  exact_means(pixels, best.assignment, best.centers.size(), counts);
  const double min_members = options.outlier_fraction * static_cast<double>(n);
  const auto largest = static_cast<std::size_t>(
      std::max_element(counts.begin(), counts.end()) - counts.begin());
  std::vector<std::size_t> survivors;
  for (std::size_t c = 0; c < counts.size(); ++c) {
    if (c == largest || (counts[c] > 0 && static_cast<double>(counts[c]) >= min_members)) {
      survivors.push_back(c);
    }
  }
  std::vector<RgbF> survivor_centers;
  for (auto c : survivors) survivor_centers.push_back(best.centers[c]);
  std::vector<std::size_t> slot(best.centers.size(), survivors.size());
  for (std::size_t s = 0; s < survivors.size(); ++s) slot[survivors[s]] = s;
  std::vector<std::size_t> assignment(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = slot[best.assignment[i]];
    assignment[i] = s < survivors.size() ? s : nearest(points[i], survivor_centers);
  }
  const auto means = exact_means(pixels, assignment, survivors.size(), counts);

  std::vector<ColorCluster> clusters;
  for (std::size_t s = 0; s < survivors.size(); ++s) {
    if (counts[s] == 0) continue;
    clusters.push_back({means[s], counts[s], section});
  }
  std::stable_sort(clusters.begin(), clusters.end(), [](const ColorCluster& a, const ColorCluster& b) {
    return a.member_count > b.member_count;
  });
  return clusters;
}

std::vector<ColorCluster> cluster_pixels(const regions::PixelRegion& region, int k,
                                         std::uint64_t seed, const ClusterOptions& options) {
  return cluster_pixels(region.pixels, region.section, k, seed, options);
}

std::string name_color(RgbF centroid, const ColorDictionary& dictionary) {
  const PaletteEntry* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& e : dictionary.entries()) {
    const double d = distance(centroid, to_float(e.anchor));
    if (d < best_d) {
      best_d = d;
      best = &e;
    }
  }
  if (dictionary.fallback_name() && best_d > dictionary.fallback_distance()) {
    return *dictionary.fallback_name();
  }
  return best->name;
}

int effective_k(Section section, int requested_k) {
  return (section == Section::Face || section == Section::Hair) ? 1 : requested_k;
}

std::vector<NamedColor> describe_region(const regions::PixelRegion& region, int k,
                                        const PaletteSet& palettes, std::uint64_t seed,
                                        const ClusterOptions& options) {
  const auto& dictionary = palettes.for_section(region.section);
  const auto clusters = cluster_pixels(region, effective_k(region.section, k), seed, options);
  std::vector<NamedColor> named;
  for (const auto& cluster : clusters) {
    auto name = name_color(cluster.centroid, dictionary);
    auto it = std::find_if(named.begin(), named.end(),
                           [&](const NamedColor& c) { return c.name == name; });
    if (it == named.end()) {
      named.push_back({std::move(name), cluster.member_count});
    } else {
      it->member_count += cluster.member_count;
    }
  }
  std::stable_sort(named.begin(), named.end(), [](const NamedColor& a, const NamedColor& b) {
    return a.member_count > b.member_count;
  });
  return named;
}

}  // namespace ivise::color
