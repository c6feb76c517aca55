#include "cdrgeo/spatial_stats.hpp"

namespace cdrgeo {

std::string_view to_string(HotspotClass c) {
  switch (c) {
    case HotspotClass::hot: return "hot";
    case HotspotClass::cold: return "cold";
    case HotspotClass::neutral: return "neutral";
  }
  return "neutral";
}

HotspotAgreement hotspot_agreement(const GiStarResult& a, const GiStarResult& b) {
  if (a.cls.size() != b.cls.size())
    throw std::invalid_argument("hotspot_agreement: unit universes differ");
  HotspotAgreement out;
  std::size_t hot_both = 0, hot_any = 0, cold_both = 0, cold_any = 0;
  for (std::size_t i = 0; i < a.cls.size(); ++i) {
    const HotspotClass ca = a.cls[i];
    const HotspotClass cb = b.cls[i];
    ++out.confusion(static_cast<int>(ca) + 1, static_cast<int>(cb) + 1);
    const bool ha = ca == HotspotClass::hot, hb = cb == HotspotClass::hot;
    const bool la = ca == HotspotClass::cold, lb = cb == HotspotClass::cold;
    hot_both += ha && hb;
    hot_any += ha || hb;
    cold_both += la && lb;
    cold_any += la || lb;
  }
  auto jaccard = [](std::size_t inter, std::size_t uni) {
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
  };
  out.hot_jaccard = jaccard(hot_both, hot_any);
  out.cold_jaccard = jaccard(cold_both, cold_any);
  return out;
}

}  // namespace cdrgeo
