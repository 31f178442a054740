#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ivise/common.hpp"
#include "ivise/config.hpp"
#include "ivise/regions.hpp"

// Fog-side color description: k-means over region pixels in RGB space, then
// nearest-anchor naming through the clothing, skin and hair palettes.
namespace ivise::color {

struct RgbF {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;
  friend bool operator==(const RgbF&, const RgbF&) = default;
};

inline RgbF to_float(Rgb c) { return {double(c.r), double(c.g), double(c.b)}; }
double distance(RgbF a, RgbF b);

struct ColorCluster {
  RgbF centroid;
  std::size_t member_count = 0;
  Section section = Section::Torso;
};

enum class PaletteKind { Clothing24, Skin, Hair };

std::string_view to_string(PaletteKind kind);
std::optional<PaletteKind> parse_palette_kind(std::string_view text);

struct PaletteEntry {
  std::string name;
  Rgb anchor;
};

class ColorDictionary {
 public:
  ColorDictionary(PaletteKind kind, std::vector<PaletteEntry> entries,
                  std::optional<std::string> fallback_name = std::nullopt,
                  double fallback_distance = 0.0);

  PaletteKind kind() const { return kind_; }
  const std::vector<PaletteEntry>& entries() const { return entries_; }
  // Name returned when every anchor is farther than fallback_distance.
  const std::optional<std::string>& fallback_name() const { return fallback_name_; }
  double fallback_distance() const { return fallback_distance_; }

  // Anchored names in order, then the fallback name.
  std::vector<std::string> names() const;
  bool contains(std::string_view name) const;

 private:
  PaletteKind kind_;
  std::vector<PaletteEntry> entries_;
  std::optional<std::string> fallback_name_;
  double fallback_distance_;
};

inline constexpr double kDefaultHairOtherDistance = 120.0;

ColorDictionary default_clothing_palette();
ColorDictionary default_skin_palette();
ColorDictionary default_hair_palette(double other_distance = kDefaultHairOtherDistance);

// `ivise-palette v1 <kind>` then `name r g b` lines. Throws ParseError.
// The hair palette's "other" fallback is implicit and not listed.
ColorDictionary parse_palette(std::string_view text,
                              double hair_other_distance = kDefaultHairOtherDistance);
ColorDictionary load_palette(const std::filesystem::path& path,
                             double hair_other_distance = kDefaultHairOtherDistance);
std::string format_palette(const ColorDictionary& dictionary);

struct PaletteSet {
  ColorDictionary clothing = default_clothing_palette();
  ColorDictionary skin = default_skin_palette();
  ColorDictionary hair = default_hair_palette();

  // torso and legs -> clothing, face -> skin, hair -> hair
  const ColorDictionary& for_section(Section section) const;

  // Reads palette.clothing / palette.skin / palette.hair paths and
  // color.hair_other_distance; absent keys keep the defaults.
  static PaletteSet from_config(const Config& config);
};

struct ClusterOptions {
  int max_iterations = 100;
  double convergence = 0.5;        // max per-channel centroid movement
  double outlier_fraction = 0.02;  // clusters below this share are dropped
  int restarts = 4;
};

// Deterministic under (pixels, k, seed). Surviving clusters sorted by
// descending member count; member counts sum to the pixel count.
// Throws EmptyRegion, KTooLarge, InvalidArgument (k < 1).
std::vector<ColorCluster> cluster_pixels(std::span<const Rgb> pixels, Section section, int k,
                                         std::uint64_t seed, const ClusterOptions& options = {});
std::vector<ColorCluster> cluster_pixels(const regions::PixelRegion& region, int k,
                                         std::uint64_t seed, const ClusterOptions& options = {});

// Nearest anchor by Euclidean RGB distance; ties go to the earlier entry.
std::string name_color(RgbF centroid, const ColorDictionary& dictionary);

struct NamedColor {
  std::string name;
  std::size_t member_count = 0;
  friend bool operator==(const NamedColor&, const NamedColor&) = default;
};

// Clusters with the section's palette (k forced to 1 for face and hair),
// names centroids and merges equal names. Sorted by descending count.
std::vector<NamedColor> describe_region(const regions::PixelRegion& region, int k,
                                        const PaletteSet& palettes, std::uint64_t seed,
                                        const ClusterOptions& options = {});

// Section k actually used by describe_region.
int effective_k(Section section, int requested_k);

}  // namespace ivise::color
