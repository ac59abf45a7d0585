#pragma once

// Combinatorial obstruction calculators: link determinants via Goeritz
// matrices and exact Smith normal form, homology of double branched covers,
// the Z2 transfer long exact sequence on built-in triangulated examples, and
// the Betti-number obstruction verdicts.

#include <array>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "slag/errors.hpp"
#include "slag/util.hpp"

namespace slag {

using BigInt = boost::multiprecision::cpp_int;

// ---------------------------------------------------------------------------
// PD codes, faces, checkerboard coloring, Goeritz matrix
// ---------------------------------------------------------------------------

/// A link diagram as a PD code: each crossing lists its four arc labels
/// counterclockwise starting from the incoming under-strand, so the
/// under-strand occupies positions 0 and 2.
struct LinkDiagram {
    std::vector<std::array<int, 4>> crossings;
    int components = 1;

    std::size_t size() const { return crossings.size(); }
};

namespace pd {

struct Dart {
    int c = 0, p = 0;
    bool operator<(const Dart& o) const { return c < o.c || (c == o.c && p < o.p); }
    bool operator==(const Dart& o) const { return c == o.c && p == o.p; }
};

struct Faces {
    std::vector<std::vector<Dart>> faces;       // orbits of darts
    std::vector<std::vector<int>> corner_face;  // [crossing][corner q] -> face id
};

/// edge involution: the other occurrence of the same arc label.
inline std::map<Dart, Dart> edge_pairing(const LinkDiagram& d) {
    std::map<int, std::vector<Dart>> occ;
    for (int c = 0; c < static_cast<int>(d.size()); ++c)
        for (int p = 0; p < 4; ++p) occ[d.crossings[c][p]].push_back({c, p});
    std::map<Dart, Dart> alpha;
    for (const auto& [label, darts] : occ) {
        if (darts.size() != 2)
            throw ArgumentError("PD code malformed: arc label " + std::to_string(label) +
                                " appears " + std::to_string(darts.size()) + " times");
        alpha[darts[0]] = darts[1];
        alpha[darts[1]] = darts[0];
    }
    return alpha;
}

/// Faces as orbits of sigma(alpha(dart)), sigma the counterclockwise
/// rotation at a crossing. Corner q at a crossing (between positions q and
/// q+1) belongs to the face owning dart (c, q+1).
inline Faces trace_faces(const LinkDiagram& d) {
    const auto alpha = edge_pairing(d);
    const int V = static_cast<int>(d.size());
    std::map<Dart, int> face_of;
    Faces out;
    for (int c = 0; c < V; ++c)
        for (int p = 0; p < 4; ++p) {
            Dart start{c, p};
            if (face_of.count(start)) continue;
            const int id = static_cast<int>(out.faces.size());
            out.faces.emplace_back();
            Dart cur = start;
            do {
                face_of[cur] = id;
                out.faces.back().push_back(cur);
                const Dart other = alpha.at(cur);
                cur = {other.c, (other.p + 1) % 4};
            } while (!(cur == start));
        }
    // Euler check: V - E + F = 2 for a connected diagram (E = 2V)
    const int F = static_cast<int>(out.faces.size());
    if (V > 0 && F != V + 2)
        throw ArgumentError("PD code not a connected planar diagram: V=" + std::to_string(V) +
                            " F=" + std::to_string(F));
    out.corner_face.assign(V, std::vector<int>(4, -1));
    for (int c = 0; c < V; ++c)
        for (int q = 0; q < 4; ++q) out.corner_face[c][q] = face_of.at({c, (q + 1) % 4});
    return out;
}

struct Checkerboard {
    Faces faces;
    std::vector<int> color;  // per face, 0/1
};

inline Checkerboard checkerboard(const LinkDiagram& d) {
    Checkerboard cb;
    cb.faces = trace_faces(d);
    const int F = static_cast<int>(cb.faces.faces.size());
    cb.color.assign(F, -1);
    // adjacency across each arc: the two corners flanking a dart
    std::vector<std::vector<int>> adj(F);
    const auto alpha = edge_pairing(d);
    for (const auto& [a, b] : alpha) {
        const int f1 = cb.faces.corner_face[a.c][a.p];
        const int f2 = cb.faces.corner_face[a.c][(a.p + 3) % 4];
        adj[f1].push_back(f2);
        adj[f2].push_back(f1);
    }
    std::vector<int> stack;
    for (int s = 0; s < F; ++s) {
        if (cb.color[s] >= 0) continue;
        cb.color[s] = 0;
        stack.push_back(s);
        while (!stack.empty()) {
            const int f = stack.back();
            stack.pop_back();
            for (int g : adj[f]) {
                if (cb.color[g] < 0) {
                    cb.color[g] = 1 - cb.color[f];
                    stack.push_back(g);
                } else if (cb.color[g] == cb.color[f]) {
                    throw ArgumentError("PD code not checkerboard colorable");
                }
            }
        }
    }
    return cb;
}

} // namespace pd

/// Goeritz matrix from the white-region incidence data of a checkerboard
/// coloring (the smaller color class, reduced by deleting the last region).
/// The unknot (no crossings) yields the empty matrix.
inline std::vector<std::vector<BigInt>> goeritz_matrix(const LinkDiagram& d) {
    if (d.crossings.empty()) return {};
    const auto cb = pd::checkerboard(d);
    const int F = static_cast<int>(cb.faces.faces.size());
    // pick the smaller color class as "white" (deterministic tie-break: color 0)
    int n0 = 0, n1 = 0;
    for (int f = 0; f < F; ++f) (cb.color[f] == 0 ? n0 : n1)++;
    const int white = (n1 < n0) ? 1 : 0;
    std::vector<int> windex(F, -1);
    int m = 0;
    for (int f = 0; f < F; ++f)
        if (cb.color[f] == white) windex[f] = m++;
    std::vector<std::vector<BigInt>> G(m, std::vector<BigInt>(m, 0));
    for (int c = 0; c < static_cast<int>(d.size()); ++c) {
        // corners alternate colors around the crossing; white pair is either
        // corners {0,2} (type +1) or {1,3} (type -1)
        const bool white02 = (cb.color[cb.faces.corner_face[c][0]] == white);
        const int eta = white02 ? 1 : -1;
        const int qa = white02 ? 0 : 1;
        const int fi = cb.faces.corner_face[c][qa];
        const int fj = cb.faces.corner_face[c][qa + 2];
        const int i = windex[fi], j = windex[fj];
        if (i == j) continue; // kink: both white corners in one region
        G[i][j] -= eta;
        G[j][i] -= eta;
        G[i][i] += eta;
        G[j][j] += eta;
    }
    // delete the last row and column
    std::vector<std::vector<BigInt>> R(m - 1, std::vector<BigInt>(m - 1));
    for (int i = 0; i + 1 < m; ++i)
        for (int j = 0; j + 1 < m; ++j) R[i][j] = G[i][j];
    return R;
}

/// Smith normal form (in place); returns the diagonal elementary divisors.
inline std::vector<BigInt> smith_normal_form(std::vector<std::vector<BigInt>> M) {
    const int rows = static_cast<int>(M.size());
    const int cols = rows ? static_cast<int>(M[0].size()) : 0;
    std::vector<BigInt> diag;
    int t = 0;
    while (t < rows && t < cols) {
        // find the smallest nonzero pivot
        int pi = -1, pj = -1;
        BigInt best = 0;
        for (int i = t; i < rows; ++i)
            for (int j = t; j < cols; ++j)
                if (M[i][j] != 0 && (pi < 0 || abs(M[i][j]) < best)) {
                    best = abs(M[i][j]);
                    pi = i;
                    pj = j;
                }
        if (pi < 0) break;
        std::swap(M[t], M[pi]);
        for (int i = 0; i < rows; ++i) std::swap(M[i][t], M[i][pj]);
        bool clean = false;
        while (!clean) {
            clean = true;
            for (int i = t + 1; i < rows; ++i)
                if (M[i][t] != 0) {
                    const BigInt q = M[i][t] / M[t][t];
                    for (int j = t; j < cols; ++j) M[i][j] -= q * M[t][j];
                    if (M[i][t] != 0) {
                        std::swap(M[t], M[i]);
                        clean = false;
                    }
                }
            for (int j = t + 1; j < cols; ++j)
                if (M[t][j] != 0) {
                    const BigInt q = M[t][j] / M[t][t];
                    for (int i = t; i < rows; ++i) M[i][j] -= q * M[i][t];
                    if (M[t][j] != 0) {
                        for (int i = 0; i < rows; ++i) std::swap(M[i][t], M[i][j]);
                        clean = false;
                    }
                }
        }
        diag.push_back(abs(M[t][t]));
        ++t;
    }
    // divisibility chain
    for (std::size_t i = 0; i + 1 < diag.size(); ++i)
        for (std::size_t j = i + 1; j < diag.size(); ++j)
            if (diag[j] % diag[i] != 0) {
                const BigInt g = gcd(diag[i], diag[j]);
                const BigInt l = diag[i] / g * diag[j];
                diag[i] = g;
                diag[j] = l;
            }
    while (static_cast<int>(diag.size()) < std::min(rows, cols)) diag.push_back(0);
    return diag;
}

/// |det| of the reduced Goeritz matrix; unknot convention 1; split
/// crossingless multi-component diagrams give 0.
inline BigInt link_determinant(const LinkDiagram& d) {
    if (d.crossings.empty()) return d.components == 1 ? 1 : 0;
    auto G = goeritz_matrix(d);
    if (G.empty()) return 1;
    auto divisors = smith_normal_form(G);
    BigInt det = 1;
    for (const auto& v : divisors) det *= v;
    return abs(det);
}

struct DoubleCoverHomology {
    bool b1_positive = false;  // H_1 of the double branched cover has free rank
    BigInt h1_order = 1;       // |H_1| when finite
    std::vector<BigInt> divisors;
    bool exceeds_base_b1 = true;  // b1(cover) > b1(S^3) = 0 channel
};

/// H_1 of the double branched cover of S^3 along the link: order equals the
/// determinant when nonzero; determinant zero means b1 > 0, which is the
/// existence channel for multivalued harmonic 1-forms.
inline DoubleCoverHomology double_cover_homology(const LinkDiagram& d) {
    DoubleCoverHomology out;
    if (d.crossings.empty()) {
        out.b1_positive = d.components > 1;
        out.h1_order = 1;
        out.exceeds_base_b1 = out.b1_positive;
        return out;
    }
    auto divisors = smith_normal_form(goeritz_matrix(d));
    out.divisors = divisors;
    for (const auto& v : divisors) {
        if (v == 0) {
            out.b1_positive = true;
        } else {
            out.h1_order *= v;
        }
    }
    out.exceeds_base_b1 = out.b1_positive;
    return out;
}

// ---------------------------------------------------------------------------
// GF(2) chain complexes and the transfer long exact sequence
// ---------------------------------------------------------------------------

namespace gf2 {

using Matrix = std::vector<std::vector<unsigned char>>;

inline Matrix make(std::size_t rows, std::size_t cols) {
    return Matrix(rows, std::vector<unsigned char>(cols, 0));
}

inline int rank(Matrix M) {
    const std::size_t rows = M.size();
    const std::size_t cols = rows ? M[0].size() : 0;
    int r = 0;
    for (std::size_t c = 0; c < cols && static_cast<std::size_t>(r) < rows; ++c) {
        std::size_t piv = r;
        while (piv < rows && !M[piv][c]) ++piv;
        if (piv == rows) continue;
        std::swap(M[r], M[piv]);
        for (std::size_t i = 0; i < rows; ++i)
            if (i != static_cast<std::size_t>(r) && M[i][c])
                for (std::size_t j = c; j < cols; ++j) M[i][j] ^= M[r][j];
        ++r;
    }
    return r;
}

inline Matrix multiply(const Matrix& A, const Matrix& B) {
    const std::size_t n = A.size(), m = B.empty() ? 0 : B[0].size(), k = B.size();
    Matrix C = make(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t l = 0; l < k; ++l)
            if (A[i][l])
                for (std::size_t j = 0; j < m; ++j) C[i][j] ^= B[l][j];
    return C;
}

/// columns spanning the null space of M.
inline Matrix null_space(const Matrix& M) {
    const std::size_t rows = M.size();
    const std::size_t cols = rows ? M[0].size() : 0;
    Matrix R = M;
    std::vector<int> pivot_col;
    int r = 0;
    for (std::size_t c = 0; c < cols && static_cast<std::size_t>(r) < rows; ++c) {
        std::size_t piv = r;
        while (piv < rows && !R[piv][c]) ++piv;
        if (piv == rows) continue;
        std::swap(R[r], R[piv]);
        for (std::size_t i = 0; i < rows; ++i)
            if (i != static_cast<std::size_t>(r) && R[i][c])
                for (std::size_t j = 0; j < cols; ++j) R[i][j] ^= R[r][j];
        pivot_col.push_back(static_cast<int>(c));
        ++r;
    }
    std::vector<int> free_cols;
    for (std::size_t c = 0; c < cols; ++c)
        if (std::find(pivot_col.begin(), pivot_col.end(), static_cast<int>(c)) == pivot_col.end())
            free_cols.push_back(static_cast<int>(c));
    Matrix N = make(cols, free_cols.size());
    for (std::size_t f = 0; f < free_cols.size(); ++f) {
        N[free_cols[f]][f] = 1;
        for (int i = 0; i < r; ++i)
            if (R[i][free_cols[f]]) N[pivot_col[i]][f] = 1;
    }
    return N;
}

/// Solve M x = b; returns false when inconsistent.
inline bool solve(const Matrix& M, const std::vector<unsigned char>& b,
                  std::vector<unsigned char>& x) {
    const std::size_t rows = M.size();
    const std::size_t cols = rows ? M[0].size() : 0;
    Matrix R = M;
    std::vector<unsigned char> rb = b;
    std::vector<int> pivot_col;
    int r = 0;
    for (std::size_t c = 0; c < cols && static_cast<std::size_t>(r) < rows; ++c) {
        std::size_t piv = r;
        while (piv < rows && !R[piv][c]) ++piv;
        if (piv == rows) continue;
        std::swap(R[r], R[piv]);
        std::swap(rb[r], rb[piv]);
        for (std::size_t i = 0; i < rows; ++i)
            if (i != static_cast<std::size_t>(r) && R[i][c]) {
                for (std::size_t j = c; j < cols; ++j) R[i][j] ^= R[r][j];
                rb[i] ^= rb[r];
            }
        pivot_col.push_back(static_cast<int>(c));
        ++r;
    }
    for (std::size_t i = r; i < rows; ++i)
        if (rb[i]) return false;
    x.assign(cols, 0);
    for (int i = 0; i < r; ++i) x[pivot_col[i]] = rb[i];
    return true;
}

inline Matrix hcat(const Matrix& A, const Matrix& B) {
    if (A.empty()) return B;
    if (B.empty()) return A;
    Matrix C = A;
    for (std::size_t i = 0; i < A.size(); ++i)
        C[i].insert(C[i].end(), B[i].begin(), B[i].end());
    return C;
}

} // namespace gf2

/// A finite simplicial complex: simplices per dimension as sorted vertex
/// tuples; boundary maps over GF(2).
struct SimplicialComplex {
    std::vector<std::vector<std::vector<int>>> simplices; // [dim][index] -> vertices

    int dim() const { return static_cast<int>(simplices.size()) - 1; }

    int index_of(int d, std::vector<int> s) const {
        std::sort(s.begin(), s.end());
        const auto& list = simplices[d];
        for (std::size_t i = 0; i < list.size(); ++i)
            if (list[i] == s) return static_cast<int>(i);
        throw ArgumentError("SimplicialComplex: missing simplex");
    }

    /// boundary matrix d: C_d -> C_{d-1} over GF(2)
    gf2::Matrix boundary(int d) const {
        if (d <= 0 || d > dim()) return gf2::make(d > 0 ? simplices[d - 1].size() : 0, 0);
        gf2::Matrix B = gf2::make(simplices[d - 1].size(), simplices[d].size());
        for (std::size_t j = 0; j < simplices[d].size(); ++j) {
            const auto& s = simplices[d][j];
            for (std::size_t drop = 0; drop < s.size(); ++drop) {
                std::vector<int> face;
                for (std::size_t v = 0; v < s.size(); ++v)
                    if (v != drop) face.push_back(s[v]);
                B[index_of(d - 1, face)][j] ^= 1;
            }
        }
        return B;
    }
};

/// A double branched (or unbranched) cover at chain level: the upstairs and
/// downstairs complexes, the projection on vertices, and the lift pairs for
/// every downstairs simplex.
struct CoverExample {
    std::string name;
    SimplicialComplex up, down;
    std::vector<int> branch_vertices_down;              // vertices in the branch locus
    // per dim, per downstairs simplex: indices of its (one or two) lifts
    std::vector<std::vector<std::array<int, 2>>> lifts;
};

namespace detail_cover {

/// Build the quotient of an equivariant complex under a fixed-point-free (on
/// simplices of dim >= 1) involution sigma given on vertices.
inline CoverExample quotient(const SimplicialComplex& up, const std::vector<int>& sigma,
                             const std::string& name) {
    CoverExample ex;
    ex.name = name;
    ex.up = up;
    const int nv = static_cast<int>(sigma.size());
    std::vector<int> orbit(nv, -1);
    int next = 0;
    for (int v = 0; v < nv; ++v) {
        if (orbit[v] >= 0) continue;
        orbit[v] = next;
        orbit[sigma[v]] = next;
        if (sigma[v] == v) ex.branch_vertices_down.push_back(next);
        ++next;
    }
    ex.down.simplices.resize(up.simplices.size());
    ex.lifts.resize(up.simplices.size());
    for (int d = 0; d <= up.dim(); ++d) {
        std::map<std::vector<int>, std::vector<int>> image; // downstairs simplex -> lift indices
        for (std::size_t i = 0; i < up.simplices[d].size(); ++i) {
            std::vector<int> img;
            for (int v : up.simplices[d][i]) img.push_back(orbit[v]);
            std::sort(img.begin(), img.end());
            for (std::size_t a = 1; a < img.size(); ++a)
                if (img[a] == img[a - 1])
                    throw ArgumentError("quotient: simplex degenerates, triangulation not fine enough");
            image[img].push_back(static_cast<int>(i));
        }
        for (auto& [simplex, lift_list] : image) {
            if (lift_list.size() != 2 && !(d == 0 && lift_list.size() == 1))
                throw ArgumentError("quotient: simplex with " + std::to_string(lift_list.size()) +
                                    " lifts");
            ex.down.simplices[d].push_back(simplex);
            std::array<int, 2> pair{lift_list[0], lift_list.size() == 2 ? lift_list[1] : lift_list[0]};
            ex.lifts[d].push_back(pair);
        }
    }
    return ex;
}

} // namespace detail_cover

/// T^2 -> S^2 branched at 4 points: the involution x -> -x on the square
/// torus, quarter-integer grid triangulation.
inline CoverExample torus_pillowcase_cover() {
    const int N = 4;
    auto vid = [&](int i, int j) { return ((i % N + N) % N) * N + ((j % N + N) % N); };
    SimplicialComplex up;
    up.simplices.resize(3);
    std::set<std::vector<int>> edges;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            const int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
            std::vector<int> t1{a, b, c}, t2{a, d, c};
            std::sort(t1.begin(), t1.end());
            std::sort(t2.begin(), t2.end());
            up.simplices[2].push_back(t1);
            up.simplices[2].push_back(t2);
            for (auto e : {std::vector<int>{a, b}, {b, c}, {a, c}, {a, d}, {d, c}}) {
                std::sort(e.begin(), e.end());
                edges.insert(e);
            }
        }
    for (int v = 0; v < N * N; ++v) up.simplices[0].push_back({v});
    up.simplices[1].assign(edges.begin(), edges.end());
    std::vector<int> sigma(N * N);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) sigma[vid(i, j)] = vid(-i, -j);
    return detail_cover::quotient(up, sigma, "T2 -> S2, 4 branch points");
}

/// Unbranched double cover of the circle (2N-gon over N-gon).
inline CoverExample circle_double_cover(int n = 6) {
    SimplicialComplex up;
    up.simplices.resize(2);
    for (int v = 0; v < 2 * n; ++v) up.simplices[0].push_back({v});
    for (int v = 0; v < 2 * n; ++v) {
        std::vector<int> e{v, (v + 1) % (2 * n)};
        std::sort(e.begin(), e.end());
        up.simplices[1].push_back(e);
    }
    std::vector<int> sigma(2 * n);
    for (int v = 0; v < 2 * n; ++v) sigma[v] = (v + n) % (2 * n);
    return detail_cover::quotient(up, sigma, "unbranched circle double cover");
}

struct LesReport {
    bool chain_identity = true;       // p o T = 0 over GF(2) on every generator
    bool short_exact = true;          // 0 -> C(L,S) -> C(L~) -> C(L) -> 0 at chain level
    std::vector<bool> slot_exact;     // exactness at each homology slot
    std::vector<std::string> slot_names;
    bool all_exact() const {
        if (!chain_identity || !short_exact) return false;
        for (bool b : slot_exact)
            if (!b) return false;
        return true;
    }
};

/// Assemble C(L,Sigma) -T-> C(L~) -p-> C(L) over GF(2), verify the chain
/// identities and exactness of the induced long exact homology sequence at
/// every slot by rank counting.
inline LesReport transfer_les_check(const CoverExample& ex) {
    LesReport rep;
    const int top = ex.up.dim();

    // relative complex C(L, Sigma): drop branch vertices in dim 0
    std::vector<std::vector<int>> rel_index(top + 1);
    std::vector<int> rel_count(top + 1, 0);
    for (int d = 0; d <= top; ++d) {
        rel_index[d].assign(ex.down.simplices[d].size(), -1);
        for (std::size_t i = 0; i < ex.down.simplices[d].size(); ++i) {
            bool in_sigma = false;
            if (d == 0)
                for (int b : ex.branch_vertices_down)
                    if (ex.down.simplices[0][i][0] == b) in_sigma = true;
            if (!in_sigma) rel_index[d][i] = rel_count[d]++;
        }
    }

    // chain maps per dimension
    std::vector<gf2::Matrix> T(top + 1), P(top + 1);
    for (int d = 0; d <= top; ++d) {
        T[d] = gf2::make(ex.up.simplices[d].size(), rel_count[d]);
        P[d] = gf2::make(ex.down.simplices[d].size(), ex.up.simplices[d].size());
        for (std::size_t i = 0; i < ex.down.simplices[d].size(); ++i) {
            // T sends a downstairs generator to the sum of its two lifts
            if (rel_index[d][i] >= 0) {
                T[d][ex.lifts[d][i][0]][rel_index[d][i]] ^= 1;
                T[d][ex.lifts[d][i][1]][rel_index[d][i]] ^= 1;
            }
            // p maps each upstairs simplex to its image
            P[d][i][ex.lifts[d][i][0]] = 1;
            if (ex.lifts[d][i][1] != ex.lifts[d][i][0]) P[d][i][ex.lifts[d][i][1]] = 1;
        }
        // chain identity p o T = 0 (each generator maps to twice its image)
        auto PT = gf2::multiply(P[d], T[d]);
        for (const auto& row : PT)
            for (unsigned char v : row)
                if (v) rep.chain_identity = false;
    }

    // boundary maps
    std::vector<gf2::Matrix> dUp(top + 2), dDown(top + 2), dRel(top + 2);
    for (int d = 1; d <= top; ++d) {
        dUp[d] = ex.up.boundary(d);
        dDown[d] = ex.down.boundary(d);
        // relative boundary: restrict rows/cols to relative generators
        dRel[d] = gf2::make(rel_count[d - 1], rel_count[d]);
        for (std::size_t j = 0; j < ex.down.simplices[d].size(); ++j) {
            if (rel_index[d][j] < 0) continue;
            for (std::size_t i = 0; i < ex.down.simplices[d - 1].size(); ++i)
                if (dDown[d][i][j] && rel_index[d - 1][i] >= 0)
                    dRel[d][rel_index[d - 1][i]][rel_index[d][j]] = 1;
        }
    }

    // short exactness at chain level: T injective, p surjective, rank match
    for (int d = 0; d <= top; ++d) {
        const int rT = gf2::rank(T[d]);
        const int rP = gf2::rank(P[d]);
        if (rT != rel_count[d]) rep.short_exact = false;
        if (rP != static_cast<int>(ex.down.simplices[d].size())) rep.short_exact = false;
        if (rT + rP != static_cast<int>(ex.up.simplices[d].size())) rep.short_exact = false;
    }

    // homology data: cycles and boundaries per complex per dim
    struct HData {
        gf2::Matrix cycles;     // columns span Z_d
        gf2::Matrix boundaries; // columns span B_d
        int betti = 0;
    };
    auto homology = [&](const std::vector<gf2::Matrix>& bnd,
                        const std::vector<int>& sizes) -> std::vector<HData> {
        std::vector<HData> H(top + 1);
        for (int d = 0; d <= top; ++d) {
            gf2::Matrix dd = (d >= 1) ? bnd[d] : gf2::make(0, sizes[d]);
            H[d].cycles = gf2::null_space(dd);
            H[d].boundaries = (d + 1 <= top) ? bnd[d + 1] : gf2::make(sizes[d], 0);
            const int z = H[d].cycles.empty() ? 0 : static_cast<int>(H[d].cycles[0].size());
            const int b = gf2::rank(H[d].boundaries);
            H[d].betti = z - b;
        }
        return H;
    };
    std::vector<int> upSizes(top + 1), downSizes(top + 1);
    for (int d = 0; d <= top; ++d) {
        upSizes[d] = static_cast<int>(ex.up.simplices[d].size());
        downSizes[d] = static_cast<int>(ex.down.simplices[d].size());
    }
    auto HA = homology(dRel, rel_count);
    auto HB = homology(dUp, upSizes);
    auto HC = homology(dDown, downSizes);

    // induced map rank on homology: rank([f(Z_A) | B_B]) - rank(B_B)
    auto induced_rank = [&](const gf2::Matrix& f, const HData& A, const HData& B) {
        gf2::Matrix img = gf2::multiply(f, A.cycles);
        const int rb = gf2::rank(B.boundaries);
        return gf2::rank(gf2::hcat(img, B.boundaries)) - rb;
    };

    // connecting map rank: for cycles c in C_d(L), lift to b upstairs with
    // p b = c, then T^{-1}(d b) is a relative cycle in dim d-1.
    auto connecting_rank = [&](int d) {
        if (d < 1) return 0;
        const auto& ZC = HC[d].cycles;
        const std::size_t ncyc = ZC.empty() ? 0 : ZC[0].size();
        gf2::Matrix img = gf2::make(rel_count[d - 1], ncyc);
        for (std::size_t j = 0; j < ncyc; ++j) {
            // lift: choose lift 0 of every downstairs simplex
            std::vector<unsigned char> b(upSizes[d], 0);
            for (std::size_t i = 0; i < ex.down.simplices[d].size(); ++i)
                if (ZC[i][j]) b[ex.lifts[d][i][0]] ^= 1;
            // boundary upstairs
            std::vector<unsigned char> db(upSizes[d - 1], 0);
            for (std::size_t r = 0; r < db.size(); ++r)
                for (std::size_t c = 0; c < b.size(); ++c)
                    if (b[c] && dUp[d][r][c]) db[r] ^= 1;
            // solve T a = db
            std::vector<unsigned char> a;
            if (!gf2::solve(T[d - 1], db, a))
                throw StateError("transfer_les_check: connecting chain not in image of T");
            for (int r = 0; r < rel_count[d - 1]; ++r) img[r][j] = a[r];
        }
        const int rb = gf2::rank(HA[d - 1].boundaries);
        return gf2::rank(gf2::hcat(img, HA[d - 1].boundaries)) - rb;
    };

    // exactness at every slot of
    //   ... -> H_d(A) -T-> H_d(B) -p-> H_d(C) -del-> H_{d-1}(A) -> ...
    for (int d = top; d >= 0; --d) {
        const int rT = induced_rank(T[d], HA[d], HB[d]);
        const int rP = induced_rank(P[d], HB[d], HC[d]);
        const int rDel = connecting_rank(d);
        const int rDelUp = (d + 1 <= top) ? connecting_rank(d + 1) : 0;
        // slot H_d(A): im(del from d+1) = ker(T_*)
        rep.slot_names.push_back("H_" + std::to_string(d) + "(L,S)");
        rep.slot_exact.push_back(rDelUp + rT == HA[d].betti);
        // slot H_d(B): im(T_*) = ker(p_*)
        rep.slot_names.push_back("H_" + std::to_string(d) + "(L~)");
        rep.slot_exact.push_back(rT + rP == HB[d].betti);
        // slot H_d(C): im(p_*) = ker(del)
        rep.slot_names.push_back("H_" + std::to_string(d) + "(L)");
        rep.slot_exact.push_back(rP + rDel == HC[d].betti);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Betti-number obstruction verdicts
// ---------------------------------------------------------------------------

enum class Pi1Class { Finite, NoNonabelianFree, Other };

struct CoveringData {
    int b1_base = 0, b1_cover = 0;
    int b2_base = 0, b2_cover = 0;
    int euler_char_base = 0;
    Pi1Class pi1 = Pi1Class::Other;
    bool cy_neighborhood = false;     // Calabi-Yau neighborhood exists
    bool unobstructed_premise = false; // nearby special Lagrangians unobstructed
};

enum class ObstructionVerdict { ObstructedNondegenerate, B1Violation, Passes };

inline const char* to_string(ObstructionVerdict v) {
    switch (v) {
        case ObstructionVerdict::ObstructedNondegenerate: return "obstructed-nondegenerate";
        case ObstructionVerdict::B1Violation: return "b1-violation";
        case ObstructionVerdict::Passes: return "passes";
    }
    return "?";
}

/// b1(cover) <= b1(base): no multivalued harmonic 1-form at all. Otherwise,
/// with the pi1 condition, a Calabi-Yau neighborhood and b2(cover) <= b2(base),
/// a nondegenerate form is obstructed.
inline ObstructionVerdict betti_obstruction(const CoveringData& cd) {
    if (cd.b1_base < 0 || cd.b1_cover < 0 || cd.b2_base < 0 || cd.b2_cover < 0)
        throw ArgumentError("betti_obstruction: Betti numbers must be nonnegative");
    if (cd.b1_cover <= cd.b1_base) return ObstructionVerdict::B1Violation;
    const bool pi1_ok = cd.pi1 != Pi1Class::Other;
    if (pi1_ok && cd.cy_neighborhood && cd.unobstructed_premise && cd.b2_cover <= cd.b2_base)
        return ObstructionVerdict::ObstructedNondegenerate;
    return ObstructionVerdict::Passes;
}

enum class SigmaVerdict { Violation, Consistent };

/// If H_1(L;Z) = 0 and a multivalued harmonic 1-form exists (b1 of the cover
/// positive), the branch locus must be disconnected.
inline SigmaVerdict disconnected_sigma_check(bool h1_base_trivial, int sigma_components,
                                             int b1_cover) {
    if (h1_base_trivial && b1_cover > 0 && sigma_components <= 1) return SigmaVerdict::Violation;
    return SigmaVerdict::Consistent;
}

// ---------------------------------------------------------------------------
// Bundled diagrams and PD parsing
// ---------------------------------------------------------------------------

/// Parse "X(1,4,2,5) X(3,6,4,1) X(5,2,6,3)" (commas/brackets flexible).
inline LinkDiagram parse_pd(const std::string& text, int components = 1) {
    LinkDiagram d;
    d.components = components;
    std::array<int, 4> cur{};
    int slot = 0, value = 0;
    bool in_number = false, negative = false, in_crossing = false;
    auto flush_number = [&]() {
        if (!in_number) return;
        if (slot > 3) throw ArgumentError("parse_pd: more than 4 labels in a crossing");
        cur[slot++] = negative ? -value : value;
        value = 0;
        in_number = false;
        negative = false;
    };
    for (char ch : text) {
        if (ch == 'X' || ch == 'x') {
            in_crossing = true;
            slot = 0;
        } else if (ch >= '0' && ch <= '9') {
            in_number = true;
            value = value * 10 + (ch - '0');
        } else if (ch == '-') {
            negative = true;
        } else {
            flush_number();
            if ((ch == ')' || ch == ']') && in_crossing) {
                if (slot != 4) throw ArgumentError("parse_pd: crossing needs 4 labels");
                d.crossings.push_back(cur);
                in_crossing = false;
            }
        }
    }
    flush_number();
    if (in_crossing && slot == 4) d.crossings.push_back(cur);
    return d;
}

namespace diagrams {

inline LinkDiagram unknot() { return LinkDiagram{{}, 1}; }
inline LinkDiagram unknot_kink() { return parse_pd("X(1,1,2,2)"); }
inline LinkDiagram two_unlink() { return LinkDiagram{{}, 2}; }
inline LinkDiagram trefoil() { return parse_pd("X(1,4,2,5) X(3,6,4,1) X(5,2,6,3)"); }
inline LinkDiagram figure_eight() { return parse_pd("X(4,2,5,1) X(8,6,1,5) X(6,3,7,4) X(2,7,3,8)"); }
inline LinkDiagram hopf() { return parse_pd("X(1,4,2,3) X(3,2,4,1)", 2); }

} // namespace diagrams

} // namespace slag

