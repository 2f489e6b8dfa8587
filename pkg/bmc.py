#!/usr/bin/env python3

import sys, argparse
from beamcraft import operator
from beamcraft import utils
from beamcraft.scene_simulator import MISMATCHES
from beamcraft.sweeper import METHODS


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(operator.EXIT_USAGE, f'{self.prog}: error: {message}\n')


def build_parser():
    formatter_class = lambda prog: argparse.HelpFormatter(prog,
        max_help_position=8, width=80, indent_increment=4)
    usage = "bmc.py operation [scenario.json] [options]"
    parser = ArgumentParser(prog='Beam Craft', formatter_class=formatter_class, usage=usage,
                            epilog="Outputs are CSV files written to the output directory.")
    parser.add_argument("operation", type=str,
                        choices=["simulate", "spectrum", "track", "beampattern", "sweep", "validate", "convergence"],
                        help="Operation to perform. See below for details on each operation.", metavar='operation')
    parser.add_argument("input", type=str, nargs='?', default=None,
                        help="Path to a JSON scenario file. Defaults to the two-interferer scenario (SOI 10 deg, interferers 20 and -40 deg).")

    parser._action_groups[0].title = "Required arguments"
    parser._action_groups[1].title = "Help"

    # IO
    io_group = parser.add_argument_group('I/O')
    io_group.add_argument("-o", "--out-dir", type=str, default=None, help="Output directory. Default is ./cache/output.", metavar='')
    io_group.add_argument("-v", "--verbose", action='store_true', help="Log every pipeline stage.")
    io_group.add_argument("--quiet", action='store_true', help="Only log warnings and errors.")

    # Scenario
    scenario_group = parser.add_argument_group('Scenario overrides - these apply to every operation that simulates data')
    scenario_group.add_argument("--seed", type=int, default=None, help="Scenario / master seed. Default is the scenario's seed (0).", metavar='')
    scenario_group.add_argument("--snr-db", type=float, default=None, help="SOI power relative to noise in dB.", metavar='')
    scenario_group.add_argument("--inr-db", type=float, default=None, help="Power of every interferer relative to noise in dB.", metavar='')
    scenario_group.add_argument("-k", "--snapshots", type=int, default=None, help="Number of snapshots K.", metavar='')
    scenario_group.add_argument("-m", "--sensors", type=int, default=None, help="Number of sensors M.", metavar='')
    scenario_group.add_argument("--mismatch", type=str, choices=MISMATCHES, default='none',
                                help="Mismatch model: none, look (+/-4 deg DoA jitter), geometry, gainphase or scattering. Default is none.", metavar='')

    # Pipeline
    pipeline_group = parser.add_argument_group('Beamformer settings')
    pipeline_group.add_argument("-q", "--grid-size", type=int, default=200, help="Angular grid size Q. Default is 200.", metavar='')
    pipeline_group.add_argument("--margin", type=float, default=4.0, help="Minimum interferer sector half-width in degrees. Default is 4.", metavar='')
    pipeline_group.add_argument("--scan-width", type=float, default=5.0, help="Half-width of the DoA refinement scan in degrees. Default is 5.", metavar='')
    pipeline_group.add_argument("--coarse-snapshots", type=int, default=None,
                                help="Snapshots averaged by the coarse DFT estimate. Default is all; 1 uses the first snapshot only.", metavar='')
    pipeline_group.add_argument("--grid-sectors", action='store_true', help="Sample interferer sectors on the angular grid instead of a lattice through each spectrum peak.")
    pipeline_group.add_argument("--solver", type=str, choices=['cg', 'direct'], default='cg', help="Weight solver. Default is cg.", metavar='')
    pipeline_group.add_argument("--tol", type=float, default=None, help="CG gradient tolerance. Default is 1e-6 |a_hat|.", metavar='')
    pipeline_group.add_argument("--max-iter", type=int, default=None, help="CG iteration cap. Default is 2M.", metavar='')
    pipeline_group.add_argument("--dump-inc", action='store_true', help="spectrum: also write the INC eigenvalues.")

    # Sweep
    sweep_group = parser.add_argument_group(title='Sweep - Monte Carlo output SINR over SNR or snapshot count', description='operation -> sweep')
    sweep_group.add_argument("--trials", type=int, default=100, help="Monte Carlo trials per axis point. Default is 100.", metavar='')
    sweep_group.add_argument("--axis", type=str, choices=['snr', 'snapshots'], default='snr', help="Sweep axis. Default is snr.", metavar='')
    sweep_group.add_argument("--axis-values", type=float, nargs='+', default=None,
                             help="Axis values. Default is -20..20 dB step 5, or 20..200 snapshots step 20.", metavar='')
    sweep_group.add_argument("--methods", type=str, nargs='+', choices=METHODS, default=['cmr-isps', 'smi', 'optimal'],
                             help=f"Methods to evaluate, from {', '.join(METHODS)}.", metavar='')
    sweep_group.add_argument("--workers", type=int, default=4, help="Concurrent trials. Default is 4.", metavar='')
    return parser


if __name__ == "__main__":
    utils.print_ascii_art()
    args = build_parser().parse_args()
    code = operator.main(args)
    utils.print_end()
    sys.exit(code)
