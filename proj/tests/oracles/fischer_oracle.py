# Independent decomposition oracle: P = A*Q + C with tr C = 0, solved by sympy
# on symbolic unknowns. Prints C++ initializer rows {I, J, re, im} for A.
import sympy as sp

def comps(n, N):
    if N == 1:
        yield (n,)
        return
    for a in range(n, -1, -1):
        for r in comps(n - a, N - 1):
            yield (a,) + r

def decompose(N, lam, P_terms, p):
    z = sp.symbols('z1:%d' % (N + 1))
    w = sp.symbols('w1:%d' % (N + 1))
    Q = sum(z[k] * w[k] + lam[k] * (z[k] ** 2 + w[k] ** 2) for k in range(N))
    def mono(I, J):
        return sp.Mul(*[z[k] ** I[k] * w[k] ** J[k] for k in range(N)])
    def tr(f):
        return sp.expand(sum(sp.diff(f, z[k], w[k]) + lam[k] * (sp.diff(f, z[k], 2) + sp.diff(f, w[k], 2)) for k in range(N)))
    P = sum(c * mono(I, J) for (I, J, c) in P_terms)
    qm = [(I, J) for b in range(p - 1) for I in comps(p - 2 - b, N) for J in comps(b, N)]
    a = sp.symbols('a0:%d' % len(qm))
    A = sum(ai * mono(I, J) for ai, (I, J) in zip(a, qm))
    eqs = sp.Poly(tr(P - A * Q), *z, *w).coeffs()
    sol = sp.solve(eqs, a, dict=True)[0]
    A = sp.expand(A.subs(sol))
    C = sp.expand(P - A * Q)
    assert tr(C) == 0
    out = []
    for (I, J) in qm:
        c = sp.Poly(A, *z, *w).coeff_monomial(mono(I, J)) if A != 0 else 0
        c = sp.nsimplify(c)
        if c != 0:
            out.append((I, J, sp.re(c), sp.im(c)))
    return out

def cpp(rows):
    s = []
    for I, J, re, im in rows:
        s.append('{{%s}, {%s}, "%s", "%s"}' % (', '.join(map(str, I)), ', '.join(map(str, J)), re, im))
    return '{' + ', '.join(s) + '}'

R = sp.Rational
cases = [
    ("n1_z3", 1, [R(1, 4)], [((3,), (0,), 1)], 3),
    ("n1_z4", 1, [R(1, 4)], [((4,), (0,), 1)], 4),
    ("n2_mixed", 2, [R(1, 10), R(3, 10)], [((2, 0), (0, 1), 1), ((1, 1), (1, 0), 3), ((0, 0), (3, 0), R(-2, 3))], 3),
    ("n3_complex", 3, [R(1, 5), R(9, 20), 0], [((1, 1, 0), (1, 0, 1), 1), ((0, 0, 4), (0, 0, 0), sp.I)], 4),
]
for name, N, lam, P, p in cases:
    print(name, cpp(decompose(N, lam, P, p)))
