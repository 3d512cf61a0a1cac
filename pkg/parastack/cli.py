"""
# Example usage

Generate a structure and look at its transmission peaks:

```shell
$ parastack --out results -q -P generate --n-elem 250 --seed 7
key                value
-----------------  --------
optical_length_um  62.64031
boundaries         124
...
$ parastack --out results -q -P peaks results/stack.json
  omega_c    fwhm_nm    t_max
---------  ---------  -------
  1.77112     0.0283   0.9964
...
```

Compute the two-photon amplitude of the peak closest to the design
wavelength and analyse it:

```shell
$ parastack --out results pairgen results/stack.json --normalization paper
$ parastack --out results -q analyze results/amplitude.bin --schmidt
key,value
entropy_bits,0.00093
cooperativity,1.00011
$ parastack --out results hom results/amplitude.bin --tau-max 2000
```

Run a campaign in 4 shards, then merge them:

```shell
$ for k in 0 1 2 3; do parastack --out results ensemble --count 500 --shard $k/4; done
$ parastack --out results ensemble --count 500 --merge
```

Units: lengths in μm, times in fs, frequencies in rad/fs, angles in
degrees on the command line. Every command writes its outputs in the
`--out` directory (default: `$PARASTACK_OUT` or the current
directory) along with a `provenance.json` document, also echoed on
stdout.
"""
import argparse
import csv
import json
import math
import os
import sys
from pathlib import Path

from tabulate import tabulate

from . import __version__
from .amplitude import (
    FrequencyGrid,
    TwoPhotonAmplitude,
    _locate_peak,
    auto_grid,
    pair_number,
    pair_rate_estimate,
    signal_spectrum,
    idler_spectrum,
    two_photon_amplitude,
)
from .ensemble import load_report, run_campaign, search_structures
from .figures import FIGURES, FigureContext, run_figure
from .interference import (
    dip_visibility,
    franson_rate,
    fringe_orientation,
    hom_rate,
    oscillation_period,
)
from .peaks import localization_length, scan_peaks
from .pod import POD
from .schema import RunConfig
from .schmidt import schmidt_decompose
from .stack import GeneratorParams, LayerStack, generate_random_stack
from .superpose import superpose_angular_range, superpose_pinholes
from .temporal import photon_flux, temporal_amplitude
from .transfer import transmission_spectrum
from .utils import (
    DomainError,
    NumericalError,
    ValidationError,
    derive_seed,
    hexdigest,
    logger,
    round_sig,
    settings,
    timeit,
    wavelength_to_omega,
)

# Take default output from env variable, fallback to current dir
default_out = os.environ.get("PARASTACK_OUT", ".")


def get_pod(args):
    return POD.from_uri(args.out or args.config_doc.output or default_out)


# Digest of every input read by the current command
inputs = {}


def read_input(path):
    path = Path(path)
    payload = POD.from_uri(str(path.parent)).read(path.name)
    inputs[str(path)] = hexdigest(payload)
    return payload


def load_stack(path):
    return LayerStack.loads(read_input(path))


def input_stack(args, required=True):
    "Structure given on the command line or by the `structure.file` key"
    path = args.structure or args.config_doc.structure_file
    if path is None:
        if required:
            raise ValidationError("Missing structure file (argument or structure.file key)")
        return None
    return load_stack(path)


def load_amplitude(path):
    path = Path(path)
    sidecar = path.with_suffix(".json")
    return TwoPhotonAmplitude.loads(read_input(path), read_input(sidecar))


def save_amplitude(pod, tpa, name="amplitude", with_csv=False):
    pod.write_text(f"{name}.json", tpa.sidecar())
    pod.write(f"{name}.bin", tpa.dumps(), force=True)
    files = [f"{name}.bin", f"{name}.json"]
    if with_csv:
        pod.write_text(f"{name}.csv", tpa.to_csv())
        files.append(f"{name}.csv")
    return files


def show(args, rows, headers):
    if args.pretty:
        print(tabulate(rows, headers=headers))
    else:
        writer = csv.writer(sys.stdout)
        writer.writerow(headers)
        writer.writerows(rows)


def show_kv(args, doc):
    rows = [[k, v] for k, v in doc.items()]
    show(args, rows, ["key", "value"])


def provenance(args, pod, outputs, **extra):
    doc = {
        "command": args.command,
        "version": __version__,
        "seed": args.seed,
        "config_digest": hexdigest(args.config_doc.dumps()),
        "inputs": dict(sorted(inputs.items())),
        "outputs": outputs,
    }
    doc.update(extra)
    text = json.dumps(doc, indent=1, sort_keys=True) + "\n"
    pod.write_text("provenance.json", text)
    if not args.quiet_provenance:
        print(text, end="")


def _theta(deg):
    return math.radians(deg or 0.0)


def _default_pump(args, stack, theta=0.0):
    "Pump of the degenerate pairs of the peak closest to the design wavelength"
    omega = None
    if args.pump_lambda is None:
        section = args.config_doc.section("pump")
        if "lambda_um" not in section and "omega_p0" not in section:
            peak = _locate_peak(stack, wavelength_to_omega(stack.lambda0), theta)
            omega = 2 * peak.omega_c
    return args.config_doc.pump(
        default_omega=omega,
        lambda_um=args.pump_lambda,
        duration_fwhm=args.duration,
        beam_diameter=args.beam,
    )


def generate(args):
    """
    Generate a random structure, written as JSON (`--name`, default
    stack.json)
    ```
    $ parastack generate --n-elem 250 --seed 7
    $ parastack generate --n-elem 250 --seed 7 --jitter 0
    ```
    Thicknesses are in μm, `--jitter` is the standard deviation of the
    boundary shifts in optical length (μm, default λ0/40).
    """
    params = args.config_doc.generator_params(
        n_elem=args.n_elem,
        seed=args.seed,
        lambda0=args.lambda0,
        jitter_sigma=args.jitter,
    )
    stack = generate_random_stack(params)
    pod = get_pod(args)
    pod.write_text(args.name, stack.dumps())
    show_kv(
        args,
        {
            "optical_length_um": round_sig(stack.optical_length(), 9),
            "boundaries": stack.boundary_count,
            "layers": len(stack),
            "digest": stack.digest(),
        },
    )
    provenance(args, pod, [args.name], stack_digest=stack.digest())


def spectrum(args):
    """
    Transmission spectrum of a structure, uniform in frequency between
    two wavelengths,
    written as spectrum.csv (omega_rad_per_fs,T,R,re_t,im_t)
    ```
    $ parastack spectrum stack.json --lambda-min 0.9 --lambda-max 1.1 --theta 30
    ```
    """
    stack = input_stack(args)
    opts = args.config_doc.spectrum_options(
        lambda_min_um=args.lambda_min,
        lambda_max_um=args.lambda_max,
        n_points=args.points,
        theta_deg=args.theta,
    )
    lo = wavelength_to_omega(opts["lambda_max_um"])
    hi = wavelength_to_omega(opts["lambda_min_um"])
    omega = [lo + (hi - lo) * k / (opts["n_points"] - 1) for k in range(opts["n_points"])]
    spec = transmission_spectrum(
        stack, omega, theta_ext=_theta(opts["theta_deg"]), direction=args.direction
    )
    pod = get_pod(args)
    pod.write_text("spectrum.csv", spec.to_csv())
    provenance(args, pod, ["spectrum.csv"])


def peaks(args):
    """
    Transmission peaks of a structure (adaptive scan), written as
    peaks.json
    ```
    $ parastack -P peaks stack.json --theta 30
    ```
    """
    stack = input_stack(args)
    opts = args.config_doc.spectrum_options(
        lambda_min_um=args.lambda_min,
        lambda_max_um=args.lambda_max,
        theta_deg=args.theta,
        floor_fraction=args.floor,
    )
    band = (
        wavelength_to_omega(opts["lambda_max_um"]),
        wavelength_to_omega(opts["lambda_min_um"]),
    )
    found = scan_peaks(
        stack, band, theta_ext=_theta(opts["theta_deg"]),
        floor_fraction=opts["floor_fraction"],
    )
    pod = get_pod(args)
    doc = {"peaks": [p.dumps() for p in found], "dropped": found.dropped}
    pod.write_text("peaks.json", json.dumps(doc, indent=1, sort_keys=True) + "\n")
    rows = [
        [round_sig(p.omega_c, 9), round_sig(p.fwhm_nm, 4), round_sig(p.t_max, 4)]
        for p in found
    ]
    show(args, rows, ["omega_c", "fwhm_nm", "t_max"])
    provenance(args, pod, ["peaks.json"], dropped=found.dropped)


def localization(args):
    """
    Localization length (optical, μm) over an ensemble of `--count`
    generated structures (at least 100)
    ```
    $ parastack localization --n-elem 250 --count 2000 --theta 30
    ```
    """
    master = args.seed or 0
    stacks = (
        generate_random_stack(
            GeneratorParams(
                n_elem=args.n_elem, seed=derive_seed(master, k), lambda0=args.lambda0
            )
        )
        for k in range(args.count)
    )
    loc = localization_length(stacks, theta_ext=_theta(args.theta), seed=master)
    pod = get_pod(args)
    pod.write_text("localization.json", json.dumps(loc.dumps(), indent=1, sort_keys=True) + "\n")
    show_kv(args, loc.dumps())
    provenance(args, pod, ["localization.json"])


def pairgen(args):
    """
    Two-photon spectral amplitude of a structure, written as
    amplitude.bin (header + complex128 values) and amplitude.json
    (sidecar). The pump defaults to twice the frequency of the peak
    closest to the design wavelength.
    ```
    $ parastack pairgen stack.json
    $ parastack pairgen stack.json --pump-lambda 0.5 --duration 250 --theta-s 20
    $ parastack pairgen stack.json --points 256 --span 4 --normalization paper --csv
    ```
    """
    stack = input_stack(args)
    geometry = args.config_doc.geometry(theta_s_deg=args.theta_s)
    pump = _default_pump(args, stack, geometry.theta_s)
    opts = args.config_doc.grid_options(n_points=args.points, span_fwhm=args.span)
    grid = None
    if opts:
        grid = auto_grid(
            stack, pump, geometry,
            n_points=opts.get("n_points", 512),
            span_fwhm=opts.get("span_fwhm", 8),
            omega_s=opts.get("omega_s"),
            square=opts.get("square"),
        )
    tpa = two_photon_amplitude(stack, pump, geometry, grid, normalization="physical")
    summary = {
        "omega_p0": round_sig(pump.omega_p0, 9),
        "grid": f"{tpa.grid.shape[0]}x{tpa.grid.shape[1]}",
        "flags": " ".join(sorted(tpa.flags)) or "-",
        "pair_number": round_sig(pair_number(tpa), 6),
        "pair_rate_estimate": round_sig(pair_rate_estimate(tpa, pump), 3),
    }
    if args.normalization == "paper":
        tpa = tpa.normalized("paper")
    pod = get_pod(args)
    files = save_amplitude(pod, tpa, with_csv=args.csv)
    show_kv(args, summary)
    provenance(args, pod, files)


def analyze(args):
    """
    Analyse a two-photon amplitude: Schmidt decomposition (`--schmidt`,
    `--modes n` exports the first n modes), spectra (`--spectrum`),
    temporal amplitude and photon fluxes (`--temporal`). Results go in
    analysis.json.
    ```
    $ parastack analyze amplitude.bin --schmidt --modes 3
    $ parastack analyze amplitude.bin --temporal --pad 2
    ```
    """
    tpa = load_amplitude(args.amplitude)
    pod = get_pod(args)
    report, files = {}, ["analysis.json"]
    if args.schmidt or args.modes:
        result = schmidt_decompose(tpa)
        report["entropy_bits"] = round_sig(result.entropy(), 9)
        report["cooperativity"] = round_sig(result.cooperativity(), 9)
        report["weights"] = [round_sig(w, 9) for w in result.weights[:8]]
        pod.write_text("schmidt.json", result.dumps())
        files.append("schmidt.json")
        for n in range(min(args.modes or 0, result.rank)):
            pod.write_text(f"mode{n + 1}.csv", result.mode_csv(n))
            files.append(f"mode{n + 1}.csv")
    if args.spectrum:
        for name, fn in (("signal", signal_spectrum), ("idler", idler_spectrum)):
            spec = fn(tpa, units=args.units)
            pod.write_text(f"{name}-spectrum.csv", spec.to_csv())
            files.append(f"{name}-spectrum.csv")
            report[f"{name}_peak_omega"] = round_sig(spec.peak_omega(), 9)
    if args.temporal:
        temporal = temporal_amplitude(tpa, pad=args.pad, window=args.window)
        pod.write_text("temporal.csv", temporal.to_csv(stride=args.stride))
        files.append("temporal.csv")
        report["sum_width_fs"] = round_sig(temporal.sum_width(), 9)
        report["temporal_flags"] = sorted(temporal.flags)
        for name in ("signal", "idler"):
            flux = photon_flux(temporal, name, units=args.units)
            pod.write_text(f"{name}-flux.csv", flux.to_csv())
            files.append(f"{name}-flux.csv")
            report[f"{name}_flux_maxima"] = len(flux.maxima())
    pod.write_text("analysis.json", json.dumps(report, indent=1, sort_keys=True) + "\n")
    show_kv(args, {k: v for k, v in report.items() if not isinstance(v, list)})
    provenance(args, pod, files)


def _delays(reach, count):
    return [reach * (2 * k / (count - 1) - 1) for k in range(count)]


def hom(args):
    """
    Hong-Ou-Mandel interferogram over delays in [-tau_max, tau_max]
    (fs), written as hom.csv (tau_fs,rate). The amplitude grid must be
    shared by signal and idler (square grid).
    ```
    $ parastack hom amplitude.bin --tau-max 2000 --points 801
    ```
    """
    tpa = load_amplitude(args.amplitude)
    pattern = hom_rate(tpa, _delays(args.tau_max, args.points), check_window=args.check_window)
    pod = get_pod(args)
    pod.write_text("hom.csv", pattern.to_csv())
    summary = {
        "minimum": round_sig(float(pattern.rate.min()), 9),
        "visibility": round_sig(dip_visibility(pattern), 9),
    }
    try:
        summary["period_fs"] = round_sig(oscillation_period(pattern), 6)
    except ValidationError:
        pass
    summary.update(pattern.meta)
    show_kv(args, summary)
    provenance(args, pod, ["hom.csv"])


def franson(args):
    """
    Franson interferometer rate over (tau_s, tau_i) delays centered on
    `--center` (fs) with half width `--tau-max`, written as franson.csv
    ```
    $ parastack franson amplitude.bin --center 5000 --tau-max 100 --points 65
    ```
    """
    tpa = load_amplitude(args.amplitude)
    tau = [args.center + t for t in _delays(args.tau_max, args.points)]
    pattern = franson_rate(tpa, tau, tau)
    pod = get_pod(args)
    pod.write_text("franson.csv", pattern.to_csv())
    show_kv(
        args,
        {
            "rate_min": round_sig(float(pattern.rate.min()), 9),
            "rate_max": round_sig(float(pattern.rate.max()), 9),
            "fringe_orientation_deg": round_sig(fringe_orientation(pattern), 6),
        },
    )
    provenance(args, pod, ["franson.csv"])


def superpose(args):
    """
    Coherent superposition. Pinholes: M shifted copies of an amplitude
    spaced by `--delta` (rad/fs) with phase step `--phase` (rad). Angular
    range: amplitudes of a structure over `--theta-range` (deg) summed
    with a fitted (or `--compensation`) linear phase.
    ```
    $ parastack superpose amplitude.bin --pinholes 8 --delta 0.002
    $ parastack superpose --structure stack.json --theta-range 0 3 --n-angles 32
    ```
    Output: superposed.bin and superposed.json
    """
    pod = get_pod(args)
    if args.theta_range:
        if not args.structure:
            raise ValidationError("Angular superposition needs --structure")
        stack = input_stack(args)
        pump = _default_pump(args, stack)
        lo, hi = args.theta_range
        spec = args.config_doc.superposition_spec(
            mode="angular",
            theta_min_deg=lo,
            theta_max_deg=hi,
            n_angles=args.n_angles,
            compensation=args.compensation,
        )
        peak = _locate_peak(stack, pump.omega_p0 / 2, spec.theta_min)
        far = _locate_peak(stack, peak.omega_c, spec.theta_max, rel_band=0.02)
        half = max(8 * peak.fwhm_omega, abs(far.omega_c - peak.omega_c) + 4 * far.fwhm_omega)
        grid = FrequencyGrid.uniform(pump.omega_p0 / 2, half, args.points or 256)
        out = superpose_angular_range(stack, pump, spec, grid)
    else:
        if not args.amplitude:
            raise ValidationError("Pinhole superposition needs an amplitude file")
        tpa = load_amplitude(args.amplitude)
        spec = args.config_doc.superposition_spec(
            mode="pinholes", m=args.pinholes, delta_omega=args.delta, phase_step=args.phase
        )
        out = superpose_pinholes(tpa, spec)
    files = save_amplitude(pod, out, name="superposed")
    provenance(args, pod, files, superposition=out.meta.get("superposition"))


def ensemble(args):
    """
    Monte Carlo campaign. `--shard k/n` runs structures with index
    k mod n; `--merge` merges every shard found in the output
    campaign directory and writes the aggregate.
    ```
    $ parastack ensemble --count 2000 --n-elem 250 --n-elem 500 --theta 0 --theta 30
    $ parastack ensemble --count 2000 --shard 1/4
    $ parastack ensemble --merge
    ```
    """
    pod = get_pod(args)
    campaign = pod.cd(args.campaign)
    if args.merge:
        report = load_report(campaign)
        campaign.write_text("aggregate.json", report.dumps_aggregate())
    else:
        config = args.config_doc.ensemble_config(
            master_seed=args.seed,
            count=args.count,
            n_elem=tuple(args.n_elem) if args.n_elem else None,
            theta=tuple(math.radians(t) for t in args.theta) if args.theta else None,
            workers=args.threads,
        )
        k, n = args.shard
        report = run_campaign(config, shard=(k, n), pod=campaign)
    summary = report.summary()
    rows = [
        [
            c["n_elem"],
            c["theta_deg"],
            c["structures"],
            c["peaks"],
            c["median_fwhm_nm"],
            (c["localization"] or {}).get("xi_um"),
        ]
        for c in summary["cells"]
    ]
    show(args, rows, ["n_elem", "theta_deg", "structures", "peaks", "median_fwhm_nm", "xi_um"])
    provenance(
        args, pod, [f"{args.campaign}/aggregate.json"],
        config_digest_campaign=report.config.digest(),
    )


def search(args):
    """
    Search generated structures for a degenerate high-transmission peak
    (`--mode degenerate`) or two peaks with a bandwidth ratio
    (`--mode two-peak`). Matching structures are written as
    match-<n>.json, the acceptance rate in search.json.
    ```
    $ parastack search --mode degenerate --t-min 0.9 --budget 10000
    $ parastack search --mode two-peak --ratio 4 --tolerance 0.5
    ```
    """
    config = args.config_doc.ensemble_config(master_seed=args.seed, workers=args.threads)
    criteria = args.config_doc.search_criteria(
        mode=args.mode,
        t_min=args.t_min,
        ratio=args.ratio,
        tolerance=args.tolerance,
    )
    budget = args.config_doc.search_budget(budget=args.budget)
    result = search_structures(config, criteria, budget)
    pod = get_pod(args)
    files = ["search.json"]
    for pos, (stack, _) in enumerate(result.matches[: args.keep]):
        name = f"match-{pos}.json"
        pod.write_text(name, stack.dumps())
        files.append(name)
    pod.write_text("search.json", json.dumps(result.dumps(), indent=1, sort_keys=True) + "\n")
    show_kv(args, {"tried": result.tried, "matched": len(result.matches), "rate": result.rate})
    provenance(args, pod, files)


def figure(args):
    """
    Export the data of a figure preset (1 to 13) in figure-<n>/
    ```
    $ parastack figure 1 --count 200
    $ parastack figure 3 --structure match-0.json
    ```
    Presets: 1 peak-width histograms, 2 relative spectrum, 3 spectral
    amplitude, 4 Schmidt modes, 5 correlation area, 6-7 two pinholes,
    8 temporal amplitudes, 9 Franson, 10-11 angular range, 12 photon
    fluxes and 13 HOM of a two-peak structure.
    """
    pod = get_pod(args).cd(f"figure-{args.number}")
    stack = input_stack(args, required=False)
    ctx = FigureContext(
        pod=pod,
        config=args.config_doc,
        stack=stack,
        count=args.count,
        budget=args.budget,
        n_points=args.points,
    )
    files = run_figure(args.number, ctx)
    provenance(args, pod, files, figure=args.number)


def print_help(parser, args):
    cmd = args.help_cmd and globals().get(args.help_cmd)
    if cmd and cmd.__doc__:
        print(cmd.__doc__)
    if cmd:
        parser.parse_args([args.help_cmd, "-h"])


def shard_like(v):
    try:
        k, n = (int(x) for x in v.split("/"))
    except ValueError:
        raise argparse.ArgumentTypeError('Shard expected as "k/n"')
    return k, n


def seed_like(v):
    value = int(v, 0)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("Seed must be a 64-bit unsigned integer")
    return value


def add_common_arguments(parser, sub=False):
    "Options accepted before or after the command name"
    # On sub-commands, absent options must not mask the top-level values
    kw = {"default": argparse.SUPPRESS} if sub else {}
    parser.add_argument("--config", "-c", help="Run document (JSON)", **kw)
    parser.add_argument(
        "--out", "-o", help=f"Output directory or uri (default: {default_out})", **kw
    )
    parser.add_argument(
        "--seed", "-s", type=seed_like, help="Seed or master seed", **kw
    )
    parser.add_argument("--threads", type=int, help="Worker threads", **kw)
    parser.add_argument(
        "--timing", "-t", action="store_true", help="Enable timing", **kw
    )
    parser.add_argument(
        "--pretty", "-P", action="store_true", help="Tabulate output", **kw
    )
    parser.add_argument(
        "--quiet-provenance", "-q", action="store_true",
        help="Do not echo the provenance block", **kw
    )
    parser.add_argument(
        "--verbose", "-v", action="count", help="Increase verbosity",
        default=argparse.SUPPRESS if sub else 0,
    )


def build_parser():
    # top-level parser
    parser = argparse.ArgumentParser(
        prog="parastack",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    add_common_arguments(parser)
    common = argparse.ArgumentParser(add_help=False)
    add_common_arguments(common, sub=True)
    subparsers = parser.add_subparsers(dest="command")

    # Add generate command
    parser_gen = subparsers.add_parser("generate", parents=[common])
    parser_gen.add_argument("--n-elem", "-n", type=int, help="Elementary slots")
    parser_gen.add_argument("--lambda0", type=float, help="Design wavelength (μm)")
    parser_gen.add_argument("--jitter", type=float, help="Boundary jitter (μm)")
    parser_gen.add_argument("--name", default="stack.json", help="Output file name")
    parser_gen.set_defaults(func=generate)

    # Add spectrum command
    parser_spec = subparsers.add_parser("spectrum", parents=[common])
    parser_spec.add_argument(
        "structure", nargs="?", help="Structure file (JSON, default: structure.file key)"
    )
    parser_spec.add_argument("--lambda-min", type=float, help="μm (default 0.9)")
    parser_spec.add_argument("--lambda-max", type=float, help="μm (default 1.1)")
    parser_spec.add_argument("--points", type=int, help="Samples (default 4001)")
    parser_spec.add_argument("--theta", type=float, help="External angle (deg)")
    parser_spec.add_argument(
        "--direction", default="left", help="Incidence side: left or right"
    )
    parser_spec.set_defaults(func=spectrum)

    # Add peaks command
    parser_peaks = subparsers.add_parser("peaks", parents=[common])
    parser_peaks.add_argument(
        "structure", nargs="?", help="Structure file (JSON, default: structure.file key)"
    )
    parser_peaks.add_argument("--lambda-min", type=float, help="μm (default 0.9)")
    parser_peaks.add_argument("--lambda-max", type=float, help="μm (default 1.1)")
    parser_peaks.add_argument("--theta", type=float, help="External angle (deg)")
    parser_peaks.add_argument(
        "--floor", type=float, help="Keep peaks above this fraction of the highest"
    )
    parser_peaks.set_defaults(func=peaks)

    # Add localization command
    parser_loc = subparsers.add_parser("localization", parents=[common])
    parser_loc.add_argument("--n-elem", "-n", type=int, default=250)
    parser_loc.add_argument("--count", type=int, default=2000)
    parser_loc.add_argument("--theta", type=float, default=0.0, help="deg")
    parser_loc.add_argument("--lambda0", type=float, default=1.0, help="μm")
    parser_loc.set_defaults(func=localization)

    # Add pairgen command
    parser_pair = subparsers.add_parser("pairgen", parents=[common])
    parser_pair.add_argument(
        "structure", nargs="?", help="Structure file (JSON, default: structure.file key)"
    )
    parser_pair.add_argument("--pump-lambda", type=float, help="Pump wavelength (μm)")
    parser_pair.add_argument("--duration", type=float, help="Pump FWHM duration (fs)")
    parser_pair.add_argument("--beam", type=float, help="Pump beam diameter (μm)")
    parser_pair.add_argument("--theta-s", type=float, help="Signal angle (deg)")
    parser_pair.add_argument("--points", type=int, help="Grid points per axis")
    parser_pair.add_argument("--span", type=float, help="Grid half width (peak FWHM)")
    parser_pair.add_argument(
        "--normalization", default="physical", help="physical (default) or paper"
    )
    parser_pair.add_argument("--csv", action="store_true", help="Also write |φ|² CSV")
    parser_pair.set_defaults(func=pairgen)

    # Add analyze command
    parser_an = subparsers.add_parser("analyze", parents=[common])
    parser_an.add_argument("amplitude", help="Amplitude file (.bin, sidecar .json)")
    parser_an.add_argument("--schmidt", action="store_true")
    parser_an.add_argument("--modes", type=int, help="Export the first n modes")
    parser_an.add_argument("--spectrum", action="store_true")
    parser_an.add_argument("--temporal", action="store_true")
    parser_an.add_argument("--pad", type=int, default=1, help="Zero-padding factor")
    parser_an.add_argument("--window", type=float, help="Minimal time window (fs)")
    parser_an.add_argument("--stride", type=int, default=1, help="Temporal CSV stride")
    parser_an.add_argument("--units", default="relative", help="relative or eV")
    parser_an.set_defaults(func=analyze)

    # Add hom command
    parser_hom = subparsers.add_parser("hom", parents=[common])
    parser_hom.add_argument("amplitude", help="Amplitude file (.bin, sidecar .json)")
    parser_hom.add_argument("--tau-max", type=float, default=1000.0, help="fs")
    parser_hom.add_argument("--points", type=int, default=401)
    parser_hom.add_argument("--check-window", action="store_true")
    parser_hom.set_defaults(func=hom)

    # Add franson command
    parser_fr = subparsers.add_parser("franson", parents=[common])
    parser_fr.add_argument("amplitude", help="Amplitude file (.bin, sidecar .json)")
    parser_fr.add_argument("--center", type=float, default=0.0, help="fs")
    parser_fr.add_argument("--tau-max", type=float, default=1000.0, help="fs")
    parser_fr.add_argument("--points", type=int, default=65)
    parser_fr.set_defaults(func=franson)

    # Add superpose command
    parser_sup = subparsers.add_parser("superpose", parents=[common])
    parser_sup.add_argument("amplitude", nargs="?", help="Amplitude file (pinholes)")
    parser_sup.add_argument("--pinholes", "-m", type=int, help="Pinhole count M")
    parser_sup.add_argument("--delta", type=float, help="Pinhole spacing (rad/fs)")
    parser_sup.add_argument("--phase", type=float, help="Phase step (rad)")
    parser_sup.add_argument("--structure", help="Structure file (angular range)")
    parser_sup.add_argument(
        "--theta-range", type=float, nargs=2, metavar=("MIN", "MAX"), help="deg"
    )
    parser_sup.add_argument("--n-angles", type=int)
    parser_sup.add_argument("--compensation", type=float, help="rad per rad")
    parser_sup.add_argument("--points", type=int, help="Grid points per axis")
    parser_sup.add_argument("--pump-lambda", type=float, help="Pump wavelength (μm)")
    parser_sup.add_argument("--duration", type=float, help="Pump FWHM duration (fs)")
    parser_sup.add_argument("--beam", type=float, help="Pump beam diameter (μm)")
    parser_sup.set_defaults(func=superpose)

    # Add ensemble command
    parser_ens = subparsers.add_parser("ensemble", parents=[common])
    parser_ens.add_argument("--count", type=int, help="Structures per n_elem")
    parser_ens.add_argument("--n-elem", "-n", type=int, action="append")
    parser_ens.add_argument("--theta", type=float, action="append", help="deg")
    parser_ens.add_argument("--shard", type=shard_like, default=(0, 1), help="k/n")
    parser_ens.add_argument("--merge", action="store_true", help="Merge shards")
    parser_ens.add_argument("--campaign", default="campaign", help="Sub-directory")
    parser_ens.set_defaults(func=ensemble)

    # Add search command
    parser_search = subparsers.add_parser("search", parents=[common])
    parser_search.add_argument("--mode", help="degenerate (default) or two-peak")
    parser_search.add_argument("--t-min", type=float, help="Minimal peak transmittance")
    parser_search.add_argument("--ratio", type=float, help="Bandwidth ratio (two-peak)")
    parser_search.add_argument("--tolerance", type=float, help="Relative ratio tolerance")
    parser_search.add_argument("--budget", type=int, help="Structures to try")
    parser_search.add_argument("--keep", type=int, default=10, help="Matches to write")
    parser_search.set_defaults(func=search)

    # Add figure command
    parser_fig = subparsers.add_parser("figure", parents=[common])
    parser_fig.add_argument("number", type=int, choices=sorted(FIGURES))
    parser_fig.add_argument("--structure", help="Structure file (skips the search)")
    parser_fig.add_argument("--count", type=int, default=200)
    parser_fig.add_argument("--budget", type=int, default=2000)
    parser_fig.add_argument("--points", type=int, default=256)
    parser_fig.set_defaults(func=figure)

    # Add help command
    parser_help = subparsers.add_parser("help", parents=[common])
    parser_help.add_argument("help_cmd", nargs="?")
    parser_help.set_defaults(func=lambda args: print_help(parser, args))

    # Add version command
    parser_version = subparsers.add_parser("version", parents=[common])
    parser_version.set_defaults(func=lambda *a: print(__version__))
    return parser


def main(argv=None):
    """
    Parse `argv`, run the command and return the exit code: 2 for
    invalid inputs, 3 for numerical failures
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_help()
        return 0
    # Enable logging
    if args.verbose == 1:
        logger.setLevel("INFO")
    elif args.verbose > 1:
        logger.setLevel("DEBUG")
    if args.threads:
        settings.max_threads = args.threads
        settings.threaded = args.threads > 1
    inputs.clear()

    try:
        args.config_doc = RunConfig()
        if args.config:
            args.config_doc = RunConfig.loads(read_input(args.config).decode())
        if args.timing:
            with timeit(f"Timing ({args.command}):"):
                args.func(args)
        else:
            args.func(args)
    except ValidationError as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, NumericalError) as exc:
        print(f"Error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        if isinstance(exc, BrokenPipeError):
            return 0
        path = getattr(exc, "filename", None) or ""
        print(f"Error: {exc.strerror or exc} {path}".rstrip(), file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 0
    return 0


def run():
    sys.exit(main())
