#include "batlab/segment_geometry.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "batlab/parallel.hpp"
#include "batlab/rng.hpp"

namespace batlab {

namespace {
constexpr double kTinyPiece = 1e-12;
}

bool TorusSegment::is_loop() const {
    if (length < 0.5) return false;
    Vec2 e = lift_endpoint();
    return circle_dist(e.x, anchor.x) < 1e-12 && circle_dist(e.y, anchor.y) < 1e-12;
}

TorusSegment TorusSegment::through(TorusPoint a, Vec2 direction, double len) {
    double n = direction.norm();
    return {make_point(a.x, a.y), {direction.x / n, direction.y / n}, len};
}

TorusSegment TorusSegment::from_lift(Vec2 a, Vec2 b) {
    Vec2 d{b.x - a.x, b.y - a.y};
    double len = d.norm();
    return {make_point(a.x, a.y), {d.x / len, d.y / len}, len};
}

BranchWord unpack_word(std::uint64_t packed, int depth) {
    BranchWord w;
    w.letters.reserve(static_cast<std::size_t>(depth));
    for (int i = 0; i < depth; ++i)
        w.letters.push_back(static_cast<std::uint8_t>(((packed >> (2 * i)) & 3u) + 1u));
    return w;
}

SegmentFamily build_singularity(Direction dir, const MapParams& p) {
    double a = p.alpha;
    double slant = std::sqrt(1.0 + a * a);
    SegmentFamily fam;
    if (dir == Direction::backward) {
        fam.provenance = "S-";
        fam.segments.push_back({{0.0, 0.0}, {1.0, 0.0}, 1.0});
        fam.segments.push_back({{0.0, 0.5}, {1.0, 0.0}, 1.0});
        // T2(V_i^-): y in [0,1/2], x = c + alpha(1/2 - y); T2(V_i^+) mirrored
        for (double c : {0.0, 0.5}) {
            fam.segments.push_back(
                {make_point(c + a / 2, 0.0), {-a / slant, 1.0 / slant}, slant / 2});
            fam.segments.push_back({make_point(c, 0.5), {a / slant, 1.0 / slant}, slant / 2});
        }
    } else {
        fam.provenance = "S+";
        fam.segments.push_back({{0.0, 0.0}, {0.0, 1.0}, 1.0});
        fam.segments.push_back({{0.5, 0.0}, {0.0, 1.0}, 1.0});
        // T1^{-1}(H_i^-): x in [0,1/2], y = c - alpha(1/2 - x); mirrored right half
        for (double c : {0.0, 0.5}) {
            fam.segments.push_back(
                {make_point(0.0, c - a / 2), {1.0 / slant, a / slant}, slant / 2});
            fam.segments.push_back({make_point(0.5, c), {1.0 / slant, -a / slant}, slant / 2});
        }
    }
    return fam;
}

double spanning_curve_spacing(const MapParams& p) {
    SegmentFamily fam = build_singularity(Direction::backward, p);
    const TorusSegment* first = nullptr;
    for (const auto& s : fam.segments) {
        if (std::fabs(s.dir.y) < 1e-9) continue;  // skip the horizontal loops
        if (!first) {
            first = &s;
            continue;
        }
        if (std::fabs(first->dir.x - s.dir.x) < 1e-14 &&
            std::fabs(first->dir.y - s.dir.y) < 1e-14) {
            Vec2 normal{-first->dir.y, first->dir.x};
            double dx = s.anchor.x - first->anchor.x;
            double dy = s.anchor.y - first->anchor.y;
            double d = std::fabs(dx * normal.x + dy * normal.y);
            d -= std::floor(d / std::fabs(normal.x)) * std::fabs(normal.x);
            return std::min(d, std::fabs(normal.x) - d);
        }
    }
    return 0.0;
}

IntersectionResult segment_intersections(const TorusSegment& a, const TorusSegment& b,
                                         double tol) {
    IntersectionResult res;
    Vec2 a0{a.anchor.x, a.anchor.y}, a1 = a.lift_endpoint();
    Vec2 b0{b.anchor.x, b.anchor.y}, b1 = b.lift_endpoint();
    double cross = a.dir.x * b.dir.y - a.dir.y * b.dir.x;

    double axlo = std::min(a0.x, a1.x), axhi = std::max(a0.x, a1.x);
    double aylo = std::min(a0.y, a1.y), ayhi = std::max(a0.y, a1.y);
    double bxlo = std::min(b0.x, b1.x), bxhi = std::max(b0.x, b1.x);
    double bylo = std::min(b0.y, b1.y), byhi = std::max(b0.y, b1.y);

    int txlo = static_cast<int>(std::floor(axlo - bxhi)) - 1;
    int txhi = static_cast<int>(std::ceil(axhi - bxlo)) + 1;
    int tylo = static_cast<int>(std::floor(aylo - byhi)) - 1;
    int tyhi = static_cast<int>(std::ceil(ayhi - bylo)) + 1;

    if (std::fabs(cross) < 1e-12) {
        for (int tx = txlo; tx <= txhi; ++tx)
            for (int ty = tylo; ty <= tyhi; ++ty) {
                double wx = b0.x + tx - a0.x, wy = b0.y + ty - a0.y;
                if (std::fabs(wx * a.dir.y - wy * a.dir.x) > tol) continue;
                double s0 = wx * a.dir.x + wy * a.dir.y;
                double s1 = s0 + b.length * (b.dir.x * a.dir.x + b.dir.y * a.dir.y);
                double lo = std::max(0.0, std::min(s0, s1));
                double hi = std::min(a.length, std::max(s0, s1));
                if (hi > lo + tol) {
                    res.collinear_overlap = true;
                    res.overlap_length += hi - lo;
                }
            }
        return res;
    }

    auto push_point = [&](TorusPoint q) {
        for (const auto& o : res.points)
            if (circle_dist(o.x, q.x) < tol && circle_dist(o.y, q.y) < tol) return;
        res.points.push_back(q);
    };

    for (int tx = txlo; tx <= txhi; ++tx)
        for (int ty = tylo; ty <= tyhi; ++ty) {
            double wx = b0.x + tx - a0.x, wy = b0.y + ty - a0.y;
            double s = (wx * b.dir.y - wy * b.dir.x) / cross;
            double r = (wx * a.dir.y - wy * a.dir.x) / cross;
            if (s < -tol || s > a.length + tol) continue;
            if (r < -tol || r > b.length + tol) continue;
            push_point(make_point(a0.x + s * a.dir.x, a0.y + s * a.dir.y));
        }
    return res;
}

// ---- analytic cuts against the singularity set ----

namespace {

// Interior solutions of  c0 + rate*s = m/2  on (lo,hi) within (0,len).
void half_integer_crossings(double c0, double rate, double lo, double hi, double len,
                            std::vector<double>& out) {
    if (rate == 0.0) return;
    double va = c0 + rate * lo, vb = c0 + rate * hi;
    double vmin = std::min(va, vb), vmax = std::max(va, vb);
    long long mlo = static_cast<long long>(std::ceil(2.0 * vmin - 1e-12));
    long long mhi = static_cast<long long>(std::floor(2.0 * vmax + 1e-12));
    for (long long m = mlo; m <= mhi; ++m) {
        double s = (0.5 * static_cast<double>(m) - c0) / rate;
        if (s > lo + 1e-12 && s < hi - 1e-12 && s > 1e-12 && s < len - 1e-12)
            out.push_back(s);
    }
}

}  // namespace

std::vector<double> cut_positions(const TorusSegment& seg, Direction dir, const MapParams& p) {
    // backward: cuts where y in Z/2 or x - alpha tent(y) in Z/2  (S^-)
    // forward:  cuts where x in Z/2 or y + alpha tent(x) in Z/2  (S^+)
    double len = seg.length;
    double pc0, pr, qc0, qr, shear;
    if (dir == Direction::backward) {
        pc0 = seg.anchor.y;
        pr = seg.dir.y;
        qc0 = seg.anchor.x;
        qr = seg.dir.x;
        shear = -p.alpha;
    } else {
        pc0 = seg.anchor.x;
        pr = seg.dir.x;
        qc0 = seg.anchor.y;
        qr = seg.dir.y;
        shear = p.alpha;
    }

    std::vector<double> cuts;
    half_integer_crossings(pc0, pr, 0.0, len, len, cuts);
    std::sort(cuts.begin(), cuts.end());

    std::vector<double> bounds;
    bounds.reserve(cuts.size() + 2);
    bounds.push_back(0.0);
    bounds.insert(bounds.end(), cuts.begin(), cuts.end());
    bounds.push_back(len);

    for (std::size_t i = 0; i + 1 < bounds.size(); ++i) {
        double lo = bounds[i], hi = bounds[i + 1];
        if (hi - lo < kTinyPiece) continue;
        double smid = 0.5 * (lo + hi);
        double pw = wrap01(pc0 + smid * pr);
        double tent_mid = std::fabs(pw - 0.5);
        double tent_rate = (pw > 0.5 ? pr : -pr);
        double g_rate = qr + shear * tent_rate;
        double g_c0 = (qc0 + smid * qr + shear * tent_mid) - g_rate * smid;
        half_integer_crossings(g_c0, g_rate, lo, hi, len, cuts);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double a, double b) { return std::fabs(a - b) < 1e-13; }),
               cuts.end());
    return cuts;
}

// ---- one generation step ----

namespace {

struct Piece {
    TorusPoint anchor;
    Vec2 dir;
    double len;
    TorusSegment as_segment() const { return {anchor, dir, len}; }
};

struct ChildBlock {
    double s_lo, s_hi;
    TorusPoint img_anchor;  // image of the s_lo end (wrapped)
    Vec2 img_dir;           // unit, oriented along increasing parent s
    double lambda;          // arclength expansion of the step map
    double img_len;
    int subdiv;
    double child_len;
    int branch;
};

std::vector<ChildBlock> expand_blocks(const Piece& piece, Direction dir, const MapParams& p) {
    std::vector<double> cuts = cut_positions(piece.as_segment(), dir, p);
    std::vector<ChildBlock> blocks;
    blocks.reserve(cuts.size() + 1);
    double prev = 0.0;
    for (std::size_t i = 0; i <= cuts.size(); ++i) {
        double hi = (i < cuts.size()) ? cuts[i] : piece.len;
        double lo = prev;
        prev = hi;
        if (hi - lo < kTinyPiece) continue;
        double smid = 0.5 * (lo + hi);
        TorusPoint mid = piece.as_segment().point_at(smid);
        BranchId id = branch_id(mid, p, dir);
        Mat2 m = (dir == Direction::backward) ? backward_branch_matrix(id.index, p)
                                              : forward_branch_matrix(id.index, p);
        Vec2 v = m.apply(piece.dir);
        double lambda = v.norm();
        Vec2 u{v.x / lambda, v.y / lambda};
        TorusPoint img_mid =
            (dir == Direction::backward) ? inverse_map(mid, p) : forward_map(mid, p);
        double img_len = lambda * (hi - lo);
        double half = 0.5 * img_len;
        TorusPoint img_anchor = make_point(img_mid.x - half * u.x, img_mid.y - half * u.y);
        int subdiv = img_len > 2.0 ? static_cast<int>(std::ceil(img_len / 2.0)) : 1;
        blocks.push_back(
            {lo, hi, img_anchor, u, lambda, img_len, subdiv, img_len / subdiv, id.index});
    }
    return blocks;
}

GenerationResult generate(const TorusSegment& W, int n, Direction dir, const MapParams& p,
                          const GenerationOptions& opt) {
    GenerationResult out;
    out.closed_chain = W.is_loop();

    GenerationRecord root;
    root.segment = W;
    root.length_class = W.length >= 1.0 ? LengthClass::long_seg : LengthClass::short_seg;
    root.quality = Quality::bad;  // convention: the root has no neighbours

    std::vector<GenerationRecord> cur{root};
    for (int level = 1; level <= n; ++level) {
        std::vector<GenerationRecord> next;
        for (std::size_t pi = 0; pi < cur.size(); ++pi) {
            const GenerationRecord& parent = cur[pi];
            Piece piece{parent.segment.anchor, parent.segment.dir, parent.segment.length};
            for (const ChildBlock& b : expand_blocks(piece, dir, p)) {
                for (int j = 0; j < b.subdiv; ++j) {
                    if (static_cast<long long>(next.size()) >= opt.guard)
                        throw GuardError("generation exceeds the segment guard",
                                         static_cast<long long>(next.size()) + 1);
                    GenerationRecord rec;
                    double off = j * b.child_len;
                    rec.segment = {make_point(b.img_anchor.x + off * b.img_dir.x,
                                              b.img_anchor.y + off * b.img_dir.y),
                                   b.img_dir,
                                   (j + 1 == b.subdiv) ? b.img_len - off : b.child_len};
                    rec.jacobian = parent.jacobian / b.lambda;
                    if (opt.keep_words && level <= 32)
                        rec.word_packed =
                            parent.word_packed |
                            (static_cast<std::uint64_t>(b.branch - 1) << (2 * (level - 1)));
                    rec.parent = static_cast<std::int64_t>(pi);
                    next.push_back(rec);
                }
            }
        }
        // length classes and chain-neighbour quality
        std::size_t m = next.size();
        for (auto& rec : next)
            rec.length_class =
                rec.segment.length >= 1.0 ? LengthClass::long_seg : LengthClass::short_seg;
        auto is_long = [&](std::size_t i) {
            return next[i].length_class == LengthClass::long_seg;
        };
        for (std::size_t i = 0; i < m; ++i) {
            bool good = false;
            if (is_long(i) && m >= 2) {
                bool hl = out.closed_chain || i > 0;
                bool hr = out.closed_chain || i + 1 < m;
                if (hl && hr) good = is_long((i + m - 1) % m) && is_long((i + 1) % m);
            }
            next[i].quality = good ? Quality::good : Quality::bad;
            if (good) {
                next[i].last_good_depth = 0;
            } else {
                std::int32_t pk = cur[static_cast<std::size_t>(next[i].parent)].last_good_depth;
                next[i].last_good_depth = (pk < 0) ? -1 : pk + 1;
            }
        }
        cur = std::move(next);
    }
    out.records = std::move(cur);
    return out;
}

}  // namespace

GenerationResult backward_generation(const TorusSegment& W, int n, const MapParams& p,
                                     const GenerationOptions& opt) {
    if (n < 0) throw std::invalid_argument("backward_generation: n must be >= 0");
    if (!ConeSpec::stable(p).contains(W.dir))
        throw std::invalid_argument("backward_generation: W must be tangent to the stable cone");
    if (W.length > 2.0 + 1e-12)
        throw std::invalid_argument("backward_generation: |W| must be <= 2");
    return generate(W, n, Direction::backward, p, opt);
}

GenerationResult forward_generation(const TorusSegment& W, int n, const MapParams& p,
                                    const GenerationOptions& opt) {
    if (n < 0) throw std::invalid_argument("forward_generation: n must be >= 0");
    if (!ConeSpec::unstable(p).contains(W.dir))
        throw std::invalid_argument("forward_generation: W must be tangent to the unstable cone");
    if (W.length > 2.0 + 1e-12)
        throw std::invalid_argument("forward_generation: |W| must be <= 2");
    return generate(W, n, Direction::forward, p, opt);
}

// ---- sampled point-walks ----

namespace {

struct WalkState {
    Piece piece;
    double s;
    double jac = 1.0;
};

void walk_step(WalkState& w, Direction dir, const MapParams& p) {
    std::vector<ChildBlock> blocks = expand_blocks(w.piece, dir, p);
    const ChildBlock* hit = &blocks.back();
    for (const auto& b : blocks) {
        if (w.s <= b.s_hi) {
            hit = &b;
            break;
        }
    }
    double local = std::clamp(w.s - hit->s_lo, 0.0, hit->s_hi - hit->s_lo);
    double s_img = local * hit->lambda;
    int j = std::min(hit->subdiv - 1, static_cast<int>(s_img / hit->child_len));
    double off = j * hit->child_len;
    double len = (j + 1 == hit->subdiv) ? hit->img_len - off : hit->child_len;
    w.piece = {make_point(hit->img_anchor.x + off * hit->img_dir.x,
                          hit->img_anchor.y + off * hit->img_dir.y),
               hit->img_dir, len};
    w.s = std::clamp(s_img - off, 0.0, len);
    w.jac /= hit->lambda;
}

long long bad_children_of(const Piece& piece, Direction dir, const MapParams& p) {
    std::vector<ChildBlock> blocks = expand_blocks(piece, dir, p);
    struct Group {
        bool short_child;
        long long count;
    };
    std::vector<Group> groups;
    groups.reserve(blocks.size());
    for (const auto& b : blocks) {
        if (b.subdiv == 1)
            groups.push_back({b.img_len < 1.0, 1});
        else
            groups.push_back({false, b.subdiv});
    }
    long long bad = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].short_child) {
            bad += groups[g].count;
            continue;
        }
        bool left_bad = (g == 0) || groups[g - 1].short_child;
        bool right_bad = (g + 1 == groups.size()) || groups[g + 1].short_child;
        if (groups[g].count == 1)
            bad += (left_bad || right_bad) ? 1 : 0;
        else
            bad += (left_bad ? 1 : 0) + (right_bad ? 1 : 0);
    }
    return bad;
}

}  // namespace

JacobianSums jacobian_sums(const TorusSegment& W, int n, double eta, const MapParams& p,
                           const SampleOptions& opt) {
    JacobianSums out;
    try {
        long long visited = 0;
        KahanSum total, short_only;
        struct Frame {
            Piece piece;
            double jac;
        };
        std::vector<std::vector<Frame>> stack(static_cast<std::size_t>(n) + 1);
        std::vector<std::size_t> pos(static_cast<std::size_t>(n) + 1, 0);
        stack[0].push_back({{W.anchor, W.dir, W.length}, 1.0});
        int depth = 0;
        while (depth >= 0) {
            auto d = static_cast<std::size_t>(depth);
            if (pos[d] >= stack[d].size()) {
                stack[d].clear();
                pos[d] = 0;
                --depth;
                continue;
            }
            Frame fr = stack[d][pos[d]++];
            if (depth == n) {
                double term = std::pow(fr.piece.len, eta) * fr.jac;
                total.add(term);
                if (fr.piece.len < 1.0) short_only.add(term);
                ++out.pieces;
                continue;
            }
            if (++visited > opt.enumeration_guard)
                throw GuardError("jacobian_sums enumeration over budget", visited);
            auto& children = stack[d + 1];
            children.clear();
            pos[d + 1] = 0;
            for (const ChildBlock& b : expand_blocks(fr.piece, Direction::backward, p)) {
                for (int j = 0; j < b.subdiv; ++j) {
                    double off = j * b.child_len;
                    double len = (j + 1 == b.subdiv) ? b.img_len - off : b.child_len;
                    children.push_back({{make_point(b.img_anchor.x + off * b.img_dir.x,
                                                    b.img_anchor.y + off * b.img_dir.y),
                                         b.img_dir, len},
                                        fr.jac / b.lambda});
                }
            }
            if (visited + static_cast<long long>(children.size()) > opt.enumeration_guard)
                throw GuardError("jacobian_sums enumeration over budget",
                                 visited + static_cast<long long>(children.size()));
            ++depth;
        }
        out.total = total.value();
        out.short_only = short_only.value();
        return out;
    } catch (const GuardError&) {
        // fall through to the sampled estimator
    }

    // sum_i |W_i|^eta J_i = integral over W of l_n(w)^{eta-1} dm(w)
    out.sampled = true;
    int S = opt.samples;
    std::vector<double> vals(static_cast<std::size_t>(S)), shorts(static_cast<std::size_t>(S));
    parallel_for(S, [&](std::int64_t i) {
        SplitMix64 g(mix_seed(opt.seed, static_cast<std::uint64_t>(i)));
        double s0 = (static_cast<double>(i) + g.uniform()) / S * W.length;
        WalkState w{{W.anchor, W.dir, W.length}, s0, 1.0};
        for (int k = 0; k < n; ++k) walk_step(w, Direction::backward, p);
        double x = std::pow(w.piece.len, eta - 1.0);
        vals[static_cast<std::size_t>(i)] = x;
        shorts[static_cast<std::size_t>(i)] = (w.piece.len < 1.0) ? x : 0.0;
    });
    KahanSum m1, m2, q1, q2;
    for (double v : vals) {
        m1.add(v);
        m2.add(v * v);
    }
    for (double v : shorts) {
        q1.add(v);
        q2.add(v * v);
    }
    double mean = m1.value() / S, meansq = m2.value() / S;
    out.total = W.length * mean;
    out.stderr_total = W.length * std::sqrt(std::max(0.0, meansq - mean * mean) / S);
    double smean = q1.value() / S, smeansq = q2.value() / S;
    out.short_only = W.length * smean;
    out.stderr_short = W.length * std::sqrt(std::max(0.0, smeansq - smean * smean) / S);
    out.pieces = S;
    return out;
}

ForwardCounts forward_counts(const TorusSegment& W, int n, const MapParams& p,
                             const SampleOptions& opt) {
    ForwardCounts out;
    try {
        GenerationOptions gopt;
        gopt.guard = opt.enumeration_guard;
        gopt.keep_words = false;
        GenerationResult gen = forward_generation(W, n, p, gopt);
        KahanSum len;
        for (const auto& r : gen.records) {
            out.count += 1.0;
            if (r.length_class == LengthClass::short_seg)
                out.short_count += 1.0;
            else
                out.long_count += 1.0;
            len.add(r.segment.length);
        }
        out.total_length = len.value();
        out.short_long_ratio = out.long_count > 0 ? out.short_count / out.long_count : 0.0;
        return out;
    } catch (const GuardError&) {
    }

    out.sampled = true;
    int S = opt.samples;
    std::vector<double> inv(static_cast<std::size_t>(S)), shp(static_cast<std::size_t>(S)),
        lng(static_cast<std::size_t>(S)), tot(static_cast<std::size_t>(S));
    parallel_for(S, [&](std::int64_t i) {
        SplitMix64 g(mix_seed(opt.seed, static_cast<std::uint64_t>(i)));
        double s0 = (static_cast<double>(i) + g.uniform()) / S * W.length;
        WalkState w{{W.anchor, W.dir, W.length}, s0, 1.0};
        for (int k = 0; k < n; ++k) walk_step(w, Direction::forward, p);
        // pre-image of the current piece on W has length piece.len * jac
        double x = 1.0 / (w.piece.len * w.jac);
        inv[static_cast<std::size_t>(i)] = x;
        shp[static_cast<std::size_t>(i)] = (w.piece.len < 1.0) ? x : 0.0;
        lng[static_cast<std::size_t>(i)] = (w.piece.len >= 1.0) ? x : 0.0;
        tot[static_cast<std::size_t>(i)] = w.piece.len * x;
    });
    KahanSum a, b, c, d;
    for (int i = 0; i < S; ++i) {
        auto u = static_cast<std::size_t>(i);
        a.add(inv[u]);
        b.add(shp[u]);
        c.add(lng[u]);
        d.add(tot[u]);
    }
    out.count = W.length * a.value() / S;
    out.short_count = W.length * b.value() / S;
    out.long_count = W.length * c.value() / S;
    out.total_length = W.length * d.value() / S;
    out.short_long_ratio = out.long_count > 0 ? out.short_count / out.long_count : 0.0;
    return out;
}

long long max_bad_children(const TorusSegment& W, int n, const MapParams& p,
                           const SampleOptions& opt) {
    int S = std::min(opt.samples, 2000);
    std::vector<long long> maxima(static_cast<std::size_t>(S), 0);
    parallel_for(S, [&](std::int64_t i) {
        SplitMix64 g(mix_seed(opt.seed ^ 0xbadc0deull, static_cast<std::uint64_t>(i)));
        double s0 = g.uniform() * W.length;
        WalkState w{{W.anchor, W.dir, W.length}, s0, 1.0};
        long long worst = 0;
        for (int k = 0; k < n; ++k) {
            worst = std::max(worst, bad_children_of(w.piece, Direction::backward, p));
            walk_step(w, Direction::backward, p);
        }
        maxima[static_cast<std::size_t>(i)] = worst;
    });
    long long worst = 0;
    for (long long m : maxima) worst = std::max(worst, m);
    return worst;
}

// ---- multi-intersection points ----

MultiIntersectionSet multi_intersections(int n, const MapParams& p,
                                         const MultiIntersectionOptions& opt) {
    if (n < 1) throw std::invalid_argument("multi_intersections: n must be >= 1");
    MultiIntersectionSet out;
    out.n = n;
    out.tol = opt.tol > 0 ? opt.tol : 1e-9 * (1.0 + p.alpha);

    // triple points of the minimal S^- decomposition
    std::vector<TorusPoint> base = {
        make_point(0.0, 0.5),
        make_point(0.5, 0.5),
        make_point(p.alpha / 2.0, 0.0),        // T2(0,0)
        make_point(0.5 + p.alpha / 2.0, 0.0),  // T2(1/2,0)
    };

    std::unordered_set<std::uint64_t> seen;
    auto push = [&](TorusPoint q) {
        auto qx = static_cast<std::uint64_t>(std::llround(q.x / out.tol));
        auto qy = static_cast<std::uint64_t>(std::llround(q.y / out.tol));
        std::uint64_t key = (qx << 32) ^ qy;
        if (seen.insert(key).second) {
            ++out.count;
            if (static_cast<long long>(out.points.size()) <
                std::min(opt.storage_cap, static_cast<long long>(1) << 24))
                out.points.push_back(q);
            else
                out.truncated_storage = true;
        }
    };

    // self-intersections of T^k(S^-) are forward images of the base points
    for (const TorusPoint& q0 : base) {
        TorusPoint q = q0;
        push(q);
        for (int k = 1; k < n; ++k) {
            q = forward_map(q, p);
            push(q);
        }
    }

    if (n >= 2) {
        // T^j S^- meets T^k S^- exactly on T^{j+1}(S^+  cap  T^{k-j-1} S^-)
        SegmentFamily sm = build_singularity(Direction::backward, p);
        std::vector<TorusSegment> level;
        for (const auto& seg : sm.segments) {
            int chunks = std::max(1, static_cast<int>(std::ceil(seg.length / 2.0)));
            double clen = seg.length / chunks;
            for (int c = 0; c < chunks; ++c)
                level.push_back({seg.point_at(c * clen), seg.dir, clen});
        }
        long long produced = 0;
        for (int m = 0; m <= n - 2; ++m) {
            for (const auto& seg : level) {
                for (double s : cut_positions(seg, Direction::forward, p)) {
                    TorusPoint q = seg.point_at(s);
                    for (int j = 0; j <= n - 2 - m; ++j) {
                        q = forward_map(q, p);
                        push(q);
                    }
                }
            }
            if (m == n - 2) break;
            std::vector<TorusSegment> next;
            for (const auto& seg : level) {
                Piece piece{seg.anchor, seg.dir, seg.length};
                for (const ChildBlock& b : expand_blocks(piece, Direction::forward, p)) {
                    for (int j = 0; j < b.subdiv; ++j) {
                        double off = j * b.child_len;
                        double len = (j + 1 == b.subdiv) ? b.img_len - off : b.child_len;
                        next.push_back({make_point(b.img_anchor.x + off * b.img_dir.x,
                                                   b.img_anchor.y + off * b.img_dir.y),
                                        b.img_dir, len});
                        if (++produced > opt.guard)
                            throw GuardError("multi_intersections family over guard", produced);
                    }
                }
            }
            level = std::move(next);
        }
    }
    return out;
}

BadCounts bad_generation_counts(const TorusSegment& W, int n, const MapParams& p,
                                const GenerationOptions& opt) {
    BadCounts out;
    out.max_i_nk.assign(static_cast<std::size_t>(std::max(1, n)), 0);
    out.sum_i_nk.assign(static_cast<std::size_t>(std::max(1, n)), 0);

    struct Node {
        Piece piece;
        std::int32_t last_good_depth;
        std::int64_t good_anchor;  // (level-local index of the good ancestor)
    };
    std::vector<Node> cur{{{W.anchor, W.dir, W.length}, -1, -1}};
    bool cyclic = W.is_loop();
    for (int level = 1; level <= n; ++level) {
        std::vector<Node> next;
        std::vector<std::int64_t> parent_of;
        std::vector<long long> bad_kids(cur.size(), 0);
        for (std::size_t pi = 0; pi < cur.size(); ++pi) {
            for (const ChildBlock& b : expand_blocks(cur[pi].piece, Direction::backward, p)) {
                for (int j = 0; j < b.subdiv; ++j) {
                    if (static_cast<long long>(next.size()) >= opt.guard)
                        throw GuardError("bad_generation_counts over guard",
                                         static_cast<long long>(next.size()));
                    double off = j * b.child_len;
                    double len = (j + 1 == b.subdiv) ? b.img_len - off : b.child_len;
                    next.push_back({{make_point(b.img_anchor.x + off * b.img_dir.x,
                                                b.img_anchor.y + off * b.img_dir.y),
                                     b.img_dir, len},
                                    0,
                                    0});
                    parent_of.push_back(static_cast<std::int64_t>(pi));
                }
            }
        }
        std::size_t m = next.size();
        auto is_long = [&](std::size_t i) { return next[i].piece.len >= 1.0; };
        for (std::size_t i = 0; i < m; ++i) {
            bool good = false;
            if (is_long(i) && m >= 2) {
                bool hl = cyclic || i > 0, hr = cyclic || i + 1 < m;
                if (hl && hr) good = is_long((i + m - 1) % m) && is_long((i + 1) % m);
            }
            auto parent = static_cast<std::size_t>(parent_of[i]);
            if (good) {
                next[i].last_good_depth = 0;
                next[i].good_anchor = static_cast<std::int64_t>(i);
            } else {
                bad_kids[parent]++;
                const Node& par = cur[parent];
                next[i].last_good_depth = par.last_good_depth < 0 ? -1 : par.last_good_depth + 1;
                // anchor ids from earlier levels may collide across levels, so
                // tag with the depth when aggregating below
                next[i].good_anchor = par.good_anchor;
            }
        }
        for (long long bk : bad_kids)
            out.max_bad_children_per_parent = std::max(out.max_bad_children_per_parent, bk);
        cur = std::move(next);
    }

    out.psi = static_cast<long long>(cur.size());
    std::vector<std::unordered_map<std::int64_t, long long>> per_k(
        static_cast<std::size_t>(n) + 1);
    for (const auto& node : cur) {
        if (node.last_good_depth == 0)
            ++out.good;
        else if (node.last_good_depth < 0)
            ++out.i_n;
        else
            per_k[static_cast<std::size_t>(node.last_good_depth)][node.good_anchor]++;
    }
    for (std::size_t k = 1; k < per_k.size(); ++k) {
        for (const auto& [anchor, cnt] : per_k[k]) {
            out.max_i_nk[k - 1] = std::max(out.max_i_nk[k - 1], cnt);
            out.sum_i_nk[k - 1] += cnt;
        }
    }
    return out;
}

}  // namespace batlab
