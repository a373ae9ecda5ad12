"""Symbolic derivation of the expected values frozen into the test suites.

Run with:  python3 tools/oracles/derive_fixture_values.py

Every constant used as an expected value in tests/ comes from this script.
It only depends on sympy and does not import or call the C++ code.
"""
import sympy as sp


def banner(title):
    print()
    print("=" * 72)
    print(title)
    print("=" * 72)


def show(label, expr, subs=None):
    value = expr if subs is None else expr.subs(subs)
    value = sp.simplify(value)
    print(f"{label:48s} = {sp.sstr(value):32s} ~ {sp.N(value, 17)}")


def christoffel(g, coords):
    n = len(coords)
    ginv = g.inv()
    gamma = [[[0] * n for _ in range(n)] for _ in range(n)]
    for i in range(n):
        for j in range(n):
            for k in range(n):
                gamma[i][j][k] = sp.simplify(sum(
                    ginv[k, l] * (sp.diff(g[j, l], coords[i]) + sp.diff(g[i, l], coords[j])
                                  - sp.diff(g[i, j], coords[l])) / 2 for l in range(n)))
    return gamma


def riemann(gamma, coords):
    # R_ij^k_l = d_i G_jl^k - d_j G_il^k + G_im^k G_jl^m - G_jm^k G_il^m
    n = len(coords)
    R = {}
    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    R[i, j, k, l] = sp.simplify(
                        sp.diff(gamma[j][l][k], coords[i]) - sp.diff(gamma[i][l][k], coords[j])
                        + sum(gamma[i][m][k] * gamma[j][l][m] - gamma[j][m][k] * gamma[i][l][m]
                              for m in range(n)))
    return R


# ---------------------------------------------------------------------------
banner("sphere2: g = diag(1, sin^2 th), Levi-Civita connection")
th, ph = sp.symbols("theta phi", real=True)
g = sp.Matrix([[1, 0], [0, sp.sin(th) ** 2]])
G = christoffel(g, [th, ph])
show("Gamma_{phi phi}^{theta}", G[1][1][0])
show("Gamma_{theta phi}^{phi}", G[0][1][1])
R = riemann(G, [th, ph])
Rlow = sp.simplify(sum(g[0, m] * R[0, 1, m, 1] for m in range(2)))
show("R_{theta phi theta phi} (k lowered)", Rlow)
show("R_{theta phi theta phi} at theta=pi/2", Rlow, {th: sp.pi / 2})
show("R_{theta phi theta phi} at theta=pi/4", Rlow, {th: sp.pi / 4})
gauss_rhs = g[0, 0] * g[1, 1] - g[1, 0] * g[0, 1]
show("g_ik g_jl - g_jk g_il (i=th,j=ph,k=th,l=ph)", gauss_rhs)
show("h scaled 1.1: gauss residual factor 1.1^2 - 1", sp.Rational(121, 100) - 1)
show("max sin^2 on [pi/4, 3pi/4]", sp.sin(sp.pi / 2) ** 2)

# ---------------------------------------------------------------------------
banner("exp_potential(1): psi = e^xi")
xi, eta = sp.symbols("xi eta", positive=True)
psi = sp.exp(xi)
eta_of_xi = sp.diff(psi, xi)
show("eta(0)", eta_of_xi, {xi: 0})
psi_star_closed = eta * sp.log(eta) - eta
legendre = (xi * eta_of_xi - psi)
show("psi*(xi=0) from xi*eta - psi", legendre, {xi: 0})
show("eta log eta - eta at eta=1", psi_star_closed, {eta: 1})
show("psi*(eta(xi)) - closed form", legendre - psi_star_closed.subs(eta, eta_of_xi))
show("d2psi*/deta2 * d2psi/dxi2", sp.diff(psi_star_closed, eta, 2).subs(eta, eta_of_xi) * sp.diff(psi, xi, 2))
show("dual Gamma*^1_11 = g^11 d g_11", sp.diff(sp.diff(psi, xi, 2), xi) / sp.diff(psi, xi, 2))
show("alpha=0 Gamma = 1/2 g^-1 dg", sp.diff(sp.diff(psi, xi, 2), xi) / sp.diff(psi, xi, 2) / 2)
show("psi*(eta) at xi=-1", legendre, {xi: -1})
show("psi*(eta) at xi=0.5", legendre, {xi: sp.Rational(1, 2)})

# ---------------------------------------------------------------------------
banner("gaussian1d: psi(t1, t2) = -t1^2/(4 t2) - 1/2 log(-2 t2), t2 < 0")
t1, t2 = sp.symbols("theta1 theta2", real=True)
psi = -t1 ** 2 / (4 * t2) - sp.log(-2 * t2) / 2
grad = [sp.simplify(sp.diff(psi, v)) for v in (t1, t2)]
hess = sp.Matrix(2, 2, lambda i, j: sp.simplify(sp.diff(psi, [t1, t2][i], [t1, t2][j])))
print("eta_1 =", grad[0])
print("eta_2 =", grad[1])
print("g =", hess)
third = {(i, j, k): sp.simplify(sp.diff(hess[j, k], [t1, t2][i])) for i in range(2) for j in range(2) for k in range(2)}
for key, val in third.items():
    print(f"d_{key[0]} g_{key[1]}{key[2]} =", val)
e1, e2 = sp.symbols("eta1 eta2", real=True)
psi_star = -sp.Rational(1, 2) - sp.log(e2 - e1 ** 2) / 2
check = sp.simplify((t1 * grad[0] + t2 * grad[1] - psi) - psi_star.subs({e1: grad[0], e2: grad[1]}))
show("(theta.eta - psi) - psi*_closed", check)
point = {t1: sp.Rational(1, 2), t2: -sp.Rational(5, 2)}
for idx, val in enumerate(grad):
    show(f"eta_{idx + 1} at (1/2, -5/2)", val, point)
for i in range(2):
    for j in range(2):
        show(f"g_{i}{j} at (1/2, -5/2)", hess[i, j], point)
show("psi at (1/2, -5/2)", psi, point)
show("psi* at (1/2, -5/2)", t1 * grad[0] + t2 * grad[1] - psi, point)
dstar = [sp.diff(psi_star, e) for e in (e1, e2)]
show("dpsi*/deta1 at eta(1/2,-5/2) (expect theta1)", dstar[0].subs({e1: grad[0], e2: grad[1]}), point)
show("dpsi*/deta2 at eta(1/2,-5/2) (expect theta2)", dstar[1].subs({e1: grad[0], e2: grad[1]}), point)

# ---------------------------------------------------------------------------
banner("cone_codim2: f(u) = (cos s, sin s, 1), s = u + 3/10 u^2, xi = -e_z, eta = f")
u = sp.symbols("u", real=True)
s = u + sp.Rational(3, 10) * u ** 2
f = sp.Matrix([sp.cos(s), sp.sin(s), 1])
fu = f.diff(u)
fuu = f.diff(u, 2)
xi_vec = sp.Matrix([0, 0, -1])
frame = sp.Matrix.hstack(fu, xi_vec, f)
coeff = sp.simplify(frame.inv() * fuu)
print("d2f in frame (Gamma, -g, -k) =", list(coeff))
phi = sp.Matrix([sp.cos(s), sp.sin(s), -1])
show("phi . f_u", (phi.T * fu)[0])
show("phi . xi", (phi.T * xi_vec)[0])
show("phi . eta", (phi.T * f)[0])
show("f_u . phi_u (= g)", (fu.T * phi.diff(u))[0])
show("f_uu . phi_u (= Gamma_111)", (fuu.T * phi.diff(u))[0])
show("g at u=1/2", (fu.T * phi.diff(u))[0], {u: sp.Rational(1, 2)})
show("Gamma^1_11 at u=1/2", coeff[0], {u: sp.Rational(1, 2)})

# ---------------------------------------------------------------------------
banner("paraboloid(2): f = (x, y, (x^2+y^2)/2), xi = (0,0,-1)")
x, y = sp.symbols("x y", real=True)
f = sp.Matrix([x, y, (x ** 2 + y ** 2) / 2])
xi_vec = sp.Matrix([0, 0, -1])
frame = sp.Matrix.hstack(f.diff(x), f.diff(y), xi_vec)
print("d_xx f in frame =", list(sp.simplify(frame.inv() * f.diff(x, 2))))
print("d_xy f in frame =", list(sp.simplify(frame.inv() * f.diff(x, y))))
phi = sp.Matrix([x, y, -1])
print("conormal checks:", sp.simplify((phi.T * f.diff(x))[0]), sp.simplify((phi.T * xi_vec)[0]))

# ---------------------------------------------------------------------------
banner("unit sphere in R^3 as an affine immersion (D f_*Y = f_*nabla Y - g xi)")
f = sp.Matrix([sp.sin(th) * sp.cos(ph), sp.sin(th) * sp.sin(ph), sp.cos(th)])
for sign in (-1, 1):
    xi_vec = sign * f
    frame = sp.Matrix.hstack(f.diff(th), f.diff(ph), xi_vec)
    c_tt = sp.simplify(frame.inv() * f.diff(th, 2))
    c_pp = sp.simplify(frame.inv() * f.diff(ph, 2))
    s_t = sp.simplify(frame.inv() * xi_vec.diff(th))
    print(f"xi = {sign:+d} f: d_tt f -> (G^th, G^ph, -g_tt) =", list(c_tt))
    print(f"xi = {sign:+d} f: d_pp f -> (G^th, G^ph, -g_pp) =", list(c_pp))
    print(f"xi = {sign:+d} f: d_th xi -> (S_th^th, S_th^ph, tau_th) =", list(s_t))

# ---------------------------------------------------------------------------
banner("grid_calculus oracles")
xx = sp.symbols("x", real=True)
show("int_0^1 2x dx", sp.integrate(2 * xx, (xx, 0, 1)))
show("int_0^1 e^x (second derivative oracle)", sp.exp(1))
show("enclosed area of [0,1]^2 (y dx path dependence)", sp.Integer(1))
