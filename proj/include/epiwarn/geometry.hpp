#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace epiwarn {

struct GeoPoint {
    double lon = 0.0;
    double lat = 0.0;
};

// One closed ring of a region boundary. Stored open: the closing edge from
// back() to front() is implicit. A polygon's first ring is its outline;
// additional rings are holes (the even-odd rule treats them uniformly).
struct Ring {
    std::vector<GeoPoint> pts;
};

struct Polygon {
    std::vector<Ring> rings;

    struct BBox {
        double min_lon = 0, min_lat = 0, max_lon = 0, max_lat = 0;
    };
    BBox bbox() const {
        BBox b{1e300, 1e300, -1e300, -1e300};
        for (const auto& r : rings)
            for (const auto& p : r.pts) {
                b.min_lon = std::min(b.min_lon, p.lon);
                b.min_lat = std::min(b.min_lat, p.lat);
                b.max_lon = std::max(b.max_lon, p.lon);
                b.max_lat = std::max(b.max_lat, p.lat);
            }
        return b;
    }
};

// Twice the signed area of triangle (a, b, p): positive when p lies to the
// left of the directed edge a->b.
inline double orient(const GeoPoint& a, const GeoPoint& b, const GeoPoint& p) {
    return (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
}

inline bool on_segment(const GeoPoint& p, const GeoPoint& a, const GeoPoint& b) {
    if (orient(a, b, p) != 0.0) return false;
    return std::min(a.lon, b.lon) <= p.lon && p.lon <= std::max(a.lon, b.lon) &&
           std::min(a.lat, b.lat) <= p.lat && p.lat <= std::max(a.lat, b.lat);
}

enum class PointLocation { outside, inside, boundary };

// Even-odd classification of a point against a polygon (all rings pooled).
// Boundary contact is detected exactly before any parity counting, so the
// half-open crossing rule below never has to disambiguate degenerate hits.
inline PointLocation locate_point(const GeoPoint& p, const Polygon& poly) {
    for (const auto& ring : poly.rings) {
        const auto& v = ring.pts;
        const std::size_t n = v.size();
        for (std::size_t i = 0; i < n; ++i)
            if (on_segment(p, v[i], v[(i + 1) % n])) return PointLocation::boundary;
    }
    bool odd = false;
    for (const auto& ring : poly.rings) {
        const auto& v = ring.pts;
        const std::size_t n = v.size();
        for (std::size_t i = 0; i < n; ++i) {
            const GeoPoint& a = v[i];
            const GeoPoint& b = v[(i + 1) % n];
            if ((a.lat > p.lat) == (b.lat > p.lat)) continue;
            // eastward ray from p crosses edge iff p is west of it at p.lat
            const double o = orient(a, b, p);
            if (b.lat > a.lat ? o > 0.0 : o < 0.0) odd = !odd;
        }
    }
    return odd ? PointLocation::inside : PointLocation::outside;
}

namespace detail {

// Strict crossing: the segments intersect in a single point interior to
// both. Shared endpoints and collinear touching do not count — adjacent
// regions legitimately share border segments.
inline bool segments_properly_cross(const GeoPoint& a, const GeoPoint& b, const GeoPoint& c,
                                    const GeoPoint& d) {
    const double o1 = orient(a, b, c);
    const double o2 = orient(a, b, d);
    const double o3 = orient(c, d, a);
    const double o4 = orient(c, d, b);
    return ((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) &&
           ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0));
}

}  // namespace detail

// Interior-overlap check used when validating a gazetteer: regions must
// partition their territory, so two region polygons may share boundary but
// not interior. Detects proper edge crossings and vertex/edge-midpoint
// containment; exact coincidence of full polygons is caught by the midpoint
// probes. Not a general boolean-intersection routine.
inline bool polygons_overlap(const Polygon& pa, const Polygon& pb) {
    const auto ba = pa.bbox();
    const auto bb = pb.bbox();
    if (ba.max_lon < bb.min_lon || bb.max_lon < ba.min_lon || ba.max_lat < bb.min_lat ||
        bb.max_lat < ba.min_lat)
        return false;
    for (const auto& ra : pa.rings) {
        const std::size_t na = ra.pts.size();
        for (std::size_t i = 0; i < na; ++i)
            for (const auto& rb : pb.rings) {
                const std::size_t nb = rb.pts.size();
                for (std::size_t j = 0; j < nb; ++j)
                    if (detail::segments_properly_cross(ra.pts[i], ra.pts[(i + 1) % na],
                                                        rb.pts[j], rb.pts[(j + 1) % nb]))
                        return true;
            }
    }
    const auto probes_hit = [](const Polygon& src, const Polygon& dst) {
        for (const auto& r : src.rings) {
            const std::size_t n = r.pts.size();
            for (std::size_t i = 0; i < n; ++i) {
                if (locate_point(r.pts[i], dst) == PointLocation::inside) return true;
                const GeoPoint& a = r.pts[i];
                const GeoPoint& b = r.pts[(i + 1) % n];
                const GeoPoint mid{(a.lon + b.lon) / 2.0, (a.lat + b.lat) / 2.0};
                if (locate_point(mid, dst) == PointLocation::inside) return true;
            }
        }
        return false;
    };
    return probes_hit(pa, pb) || probes_hit(pb, pa);
}

}  // namespace epiwarn
