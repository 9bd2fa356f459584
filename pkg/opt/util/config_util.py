import argparse
import json

from spdprox import ArmijoParams, ProxConfig

COMMANDS = ["mean", "median", "prox", "denoise", "bound", "synth"]


def define_common_args(parser: argparse.ArgumentParser):
    parser.add_argument('command', choices=COMMANDS)
    parser.add_argument('input', type=str, nargs='?', default=None,
                        help="Input field file (not used by bound/synth)")

    parser.add_argument('--config', '-c',
                         type=str,
                         default=None,
                         help="Config json file (will override args)")

    prox = ProxConfig()
    group = parser.add_argument_group("Proximal point")
    group.add_argument('--beta0', type=float, default=prox.beta0,
                       help="Initial proximal weight beta_0 > 0")
    group.add_argument('--theta1', type=float, default=prox.theta1,
                       help="beta_{k+1} = theta1 beta_k, in (0, 1]")
    group.add_argument('--theta2', type=float, default=prox.theta2,
                       help="eps_{k+1} = theta2 eps_k, in (0, 1)")
    group.add_argument('--eps0', type=float, default=prox.eps0,
                       help="Initial inexactness; 0 runs the exact method")
    group.add_argument('--mu', type=float, default=prox.mu,
                       help="Inexactness constant in (0, 1)")
    group.add_argument('--outer_tol', '--outer-tol', type=float, default=prox.outer_tol,
                       help="Stop when beta_k d(a_{k+1}, a_k) (or the gradient norm) is below this")
    group.add_argument('--residual_tol', '--residual-tol', type=float, default=prox.residual_tol,
                       help="Inner stopping surrogate slack")
    group.add_argument('--max_outer', '--max-outer', type=int, default=prox.max_outer)
    group.add_argument('--max_inner', '--max-inner', type=int, default=prox.max_inner)
    group.add_argument('--analytic_inner', action='store_true', default=False,
                       help="Gradient-based inner directions for differentiable objectives")

    armijo = ArmijoParams()
    group = parser.add_argument_group("Inner line search")
    group.add_argument('--eta', type=float, default=armijo.eta,
                       help="Sufficient decrease constant")
    group.add_argument('--upsilon', type=float, default=armijo.upsilon,
                       help="Step growth/shrink factor")
    group.add_argument('--delta', type=float, default=armijo.delta,
                       help="Forward-difference step")
    group.add_argument('--tau', type=float, default=armijo.tau,
                       help="Stop when |h(x) - h(x_aux)| < tau")
    group.add_argument('--tau0', type=float, default=None,
                       help="Loose starting tau, reduced by kappa per inner sweep")
    group.add_argument('--kappa', type=float, default=armijo.kappa)
    group.add_argument('--max_iters', '--max-iters', type=int, default=armijo.max_iters,
                       help="Iteration cap of one inner line-search run")


def maybe_merge_config_file(args, allow_invalid=False):
    """
    Load json config file if specified and merge the arguments
    """
    if args.config is not None:
        with open(args.config, "r") as config_file:
            configs = json.load(config_file)
        configs = {k.replace('-', '_'): v for k, v in configs.items()}
        invalid_args = list(set(configs.keys()) - set(dir(args)))
        if invalid_args and not allow_invalid:
            raise ValueError(f"Invalid args {invalid_args} in {args.config}.")
        args.__dict__.update(configs)


def build_prox_config(args) -> ProxConfig:
    """
    Map parsed flags onto the solver options
    """
    armijo = ArmijoParams(delta=args.delta,
                          eta=args.eta,
                          upsilon=args.upsilon,
                          tau=args.tau,
                          max_iters=args.max_iters,
                          tau0=args.tau0,
                          kappa=args.kappa)
    return ProxConfig(beta0=args.beta0,
                      theta1=args.theta1,
                      theta2=args.theta2,
                      eps0=args.eps0,
                      mu=args.mu,
                      armijo=armijo,
                      outer_tol=args.outer_tol,
                      residual_tol=args.residual_tol,
                      max_outer=args.max_outer,
                      max_inner=args.max_inner,
                      analytic_inner=args.analytic_inner).validate()
