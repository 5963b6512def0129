"""Family of 2-D lens profiles rho(t) for several dilation strengths.

Reproduces the planar design study: kappa1 = 1.5, a = 100, z0 = 70,
alpha in {-0.4 ... 0.4}.  Writes one CSV per alpha and, when matplotlib
is importable, a combined PNG.
"""

import argparse
from pathlib import Path

from hybridlens import OpticalConstants, io, solve_rho_2d


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--alphas", type=float, nargs="+",
                        default=[-0.4, -0.2, 0.0, 0.2, 0.4])
    parser.add_argument("--z0", type=float, default=70.0)
    parser.add_argument("--a", type=float, default=100.0)
    parser.add_argument("--t-max", type=float, default=1.0)
    parser.add_argument("--step", type=float, default=1e-3)
    parser.add_argument("--out", default="out/profiles2d")
    args = parser.parse_args()

    constants = OpticalConstants(n1=1.0, n2=1.5, n3=1.0,
                                 a=args.a, c=1.5 * args.a)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    curves = {}
    for alpha in args.alphas:
        t, rho = solve_rho_2d(lambda tt: alpha * tt, constants,
                              (-args.t_max, args.t_max), args.z0, args.step)
        curves[alpha] = (t, rho)
        io.write_csv(out / f"profile_alpha_{alpha:+g}.csv", ["t", "rho"],
                     [t, rho])
        print(f"alpha = {alpha:+5.2f}: rho range "
              f"[{rho.min():.6f}, {rho.max():.6f}]")

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print(f"CSV curves in {out} (matplotlib not available, no PNG)")
        return
    fig, ax = plt.subplots(figsize=(6, 4))
    for alpha, (t, rho) in curves.items():
        ax.plot(t, rho, label=f"$\\alpha = {alpha:+g}$")
    ax.set_xlabel("t")
    ax.set_ylabel(r"$\rho(t)$")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out / "profiles.png", dpi=150)
    print(f"CSV curves and profiles.png in {out}")


if __name__ == "__main__":
    main()
