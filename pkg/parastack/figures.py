"""
Plot-ready exports.

Every preset computes the data behind one figure of the random-stack
photon-pair study and writes CSV (and sometimes JSON) files in a POD.
Presets needing a structure take the one given in the context or
search the campaign configured in the run document for a suitable
one:

``` shell
$ parastack --out results figure 3 --structure stack.json
$ ls results/figure-3
fig3.csv  provenance.json
```

Preset 1 runs campaigns and is by far the slowest; its size follows
`FigureContext.count`.
"""
import io
import math
from dataclasses import dataclass, field

from numpy import linspace

from .amplitude import (
    EmissionGeometry,
    FrequencyGrid,
    PumpConfig,
    auto_grid,
    correlation_area,
    reference_amplitude,
    relative_spectrum,
    two_photon_amplitude,
    _locate_peak,
)
from .ensemble import (
    EnsembleConfig,
    match_peaks,
    run_campaign,
    search_structures,
)
from .interference import franson_rate, hom_rate
from .peaks import scan_peaks
from .schema import RunConfig
from .schmidt import schmidt_decompose
from .superpose import SuperpositionSpec, superpose_angular_range, superpose_pinholes
from .temporal import photon_flux, temporal_amplitude
from .utils import NumericalError, ValidationError, fmt_float, logger

__all__ = ["FigureContext", "FIGURES", "run_figure"]

FIGURES = {}


def preset(number, title):
    def decorator(fn):
        fn.title = title
        FIGURES[number] = fn
        return fn

    return decorator


@dataclass
class FigureContext:
    pod: object
    config: RunConfig = field(default_factory=RunConfig)
    stack: object = None
    count: int = 200  # structures per campaign cell
    budget: int = 2000  # search budget
    n_points: int = 256
    cache: dict = field(default_factory=dict)

    def write(self, name, text):
        self.pod.write_text(name, text)
        logger.info("Wrote %s", name)
        return name


def _csv(header, rows):
    buff = io.StringIO()
    buff.write(",".join(header) + "\n")
    for row in rows:
        buff.write(",".join(v if isinstance(v, str) else fmt_float(v) for v in row) + "\n")
    return buff.getvalue()


def _search(ctx, mode):
    key = ("search", mode)
    if key in ctx.cache:
        return ctx.cache[key]
    criteria = ctx.config.search_criteria(mode=mode)
    if ctx.stack is not None:
        base = ctx.config.ensemble_config()
        peaks = scan_peaks(ctx.stack, base.band, theta_ext=criteria.theta)
        groups = match_peaks(ctx.stack, peaks, criteria)
        if not groups:
            raise NumericalError(f"Structure has no peak group matching {mode} criteria")
        found = (ctx.stack, groups[0])
    else:
        config = ctx.config.ensemble_config()
        result = search_structures(config, criteria, ctx.budget)
        if not result.matches:
            raise NumericalError(
                f"No {mode} structure found in {result.tried} structures"
            )
        found = result.matches[0]
    ctx.cache[key] = found
    return found


def _degenerate(ctx):
    stack, (peak,) = _search(ctx, "degenerate")
    pump = ctx.config.pump(default_omega=2 * peak.omega_c)
    return stack, peak, pump


def _degenerate_amplitude(ctx):
    if "degenerate" not in ctx.cache:
        stack, peak, pump = _degenerate(ctx)
        opts = ctx.config.grid_options()
        grid = None
        if opts:
            grid = auto_grid(
                stack, pump,
                n_points=opts.get("n_points", 512),
                span_fwhm=opts.get("span_fwhm", 8),
                omega_s=opts.get("omega_s"),
                square=opts.get("square"),
            )
        ctx.cache["degenerate"] = two_photon_amplitude(
            stack, pump, grid=grid, normalization="paper"
        )
    return ctx.cache["degenerate"]


def _pinholes(ctx, m, tpa, peak):
    """
    M pinholes whose edge ones are `superpose.delta_omega` apart (6
    peak FWHM by default) whatever M
    """
    opts = ctx.config.section("superpose")
    span = opts.get("delta_omega") or 6 * peak.fwhm_omega
    spec = SuperpositionSpec(
        mode="pinholes",
        m=m,
        delta_omega=span / (m - 1) if m > 1 else None,
        phase_step=opts.get("phase_step", 0.0),
    )
    return superpose_pinholes(tpa, spec)


def _schmidt_export(ctx, tpa, name, n_modes=3):
    result = schmidt_decompose(tpa)
    files = [ctx.write(f"{name}.json", result.dumps())]
    for n in range(min(n_modes, result.rank)):
        files.append(ctx.write(f"{name}-mode{n + 1}.csv", result.mode_csv(n)))
    return files


@preset(1, "Peak width distributions versus structure length and angle")
def figure_1(ctx):
    base = ctx.config.ensemble_config(count=ctx.count)
    files = []
    for suffix, n_elem, theta in (
        ("a", (250, 500, 750), (0.0,)),
        ("b", (250,), tuple(math.radians(t) for t in (0, 30, 60))),
    ):
        config = EnsembleConfig(
            master_seed=base.master_seed,
            count=base.count,
            n_elem=n_elem,
            theta=theta,
            band_um=base.band_um,
            bins_nm=base.bins_nm,
            lambda0=base.lambda0,
            jitter_sigma=base.jitter_sigma,
            workers=base.workers,
        )
        report = run_campaign(config)
        edges = config.bins_nm
        centers = [math.sqrt(a * b) for a, b in zip(edges, edges[1:])]
        columns, header = [], ["fwhm_nm"]
        for n in n_elem:
            for t in theta:
                columns.append(report.histogram(n, t).probability)
                header.append(f"n{n}_theta{round(math.degrees(t))}")
        rows = [[c, *col] for c, *col in zip(centers, *columns)]
        files.append(ctx.write(f"fig1{suffix}.csv", _csv(header, rows)))
        files.append(ctx.write(f"fig1{suffix}-aggregate.json", report.dumps_aggregate()))
    return files


@preset(2, "Relative signal spectrum versus frequency and emission angle")
def figure_2(ctx):
    stack, peak, pump = _degenerate(ctx)
    n_points = max(64, ctx.n_points // 2)
    rows = []
    for theta_deg in linspace(0, 60, 13):
        geometry = EmissionGeometry(theta_s=math.radians(theta_deg))
        # Each angle gets a window around its own resonance
        try:
            grid = auto_grid(stack, pump, geometry, n_points=n_points)
        except NumericalError as exc:
            logger.warning("Skipping %s deg: %s", theta_deg, exc)
            continue
        tpa = two_photon_amplitude(stack, pump, geometry, grid)
        ref = reference_amplitude(stack, pump, geometry, grid)
        rel = relative_spectrum(tpa, ref)
        for w, v in zip(rel.omega, rel.values):
            rows.append([2 * w / pump.omega_p0, theta_deg, v])
    return [ctx.write("fig2.csv", _csv(["norm_omega_s", "theta_deg", "s_rel"], rows))]


@preset(3, "Two-photon spectral amplitude of a degenerate peak")
def figure_3(ctx):
    tpa = _degenerate_amplitude(ctx)
    return [ctx.write("fig3.csv", tpa.to_csv())]


@preset(4, "Schmidt modes of the degenerate-peak amplitude")
def figure_4(ctx):
    return _schmidt_export(ctx, _degenerate_amplitude(ctx), "fig4")


@preset(5, "Correlation area versus pump beam diameter")
def figure_5(ctx):
    stack, peak, pump = _degenerate(ctx)
    geometry = ctx.config.geometry()
    if geometry.sin_s == 0:
        geometry = EmissionGeometry(theta_s=math.radians(26.3))
    rows = []
    for diameter in (30.0, 100.0, 300.0, 1000.0, 3000.0):
        beam = PumpConfig(
            pump.omega_p0, pump.duration_fwhm, pump.amplitude, beam_diameter=diameter
        )
        area = correlation_area(stack, beam, geometry)
        rows.append([diameter, area.sigma_theta, area.sigma_psi])
    header = ["beam_diameter_um", "sigma_theta_rad", "sigma_psi_rad"]
    return [ctx.write("fig5.csv", _csv(header, rows))]


def _two_pinholes(ctx):
    if "pinholes-2" not in ctx.cache:
        _, peak, _ = _degenerate(ctx)
        ctx.cache["pinholes-2"] = _pinholes(ctx, 2, _degenerate_amplitude(ctx), peak)
    return ctx.cache["pinholes-2"]


@preset(6, "Spectral amplitude superposed from two pinholes")
def figure_6(ctx):
    return [ctx.write("fig6.csv", _two_pinholes(ctx).to_csv())]


@preset(7, "Schmidt modes of the two-pinhole amplitude")
def figure_7(ctx):
    return _schmidt_export(ctx, _two_pinholes(ctx), "fig7")


@preset(8, "Temporal amplitudes for two and eight pinholes")
def figure_8(ctx):
    _, peak, _ = _degenerate(ctx)
    tpa = _degenerate_amplitude(ctx)
    files = []
    for suffix, m in (("a", 2), ("b", 8)):
        temporal = temporal_amplitude(_pinholes(ctx, m, tpa, peak))
        stride = max(1, len(temporal.t_s) // 128)
        files.append(ctx.write(f"fig8{suffix}.csv", temporal.to_csv(stride=stride)))
    return files


@preset(9, "Franson coincidence rate for one and eight pinholes")
def figure_9(ctx):
    _, peak, _ = _degenerate(ctx)
    tpa = _degenerate_amplitude(ctx)
    reach = 8 * math.pi / peak.fwhm_omega
    tau = linspace(-reach, reach, 65)
    files = []
    for suffix, m in (("a", 1), ("b", 8)):
        pattern = franson_rate(_pinholes(ctx, m, tpa, peak), tau, tau)
        files.append(ctx.write(f"fig9{suffix}.csv", pattern.to_csv()))
    return files


def _angular(ctx):
    if "angular" in ctx.cache:
        return ctx.cache["angular"]
    stack, peak, pump = _degenerate(ctx)
    opts = ctx.config.section("superpose")
    spec = SuperpositionSpec(
        mode="angular",
        theta_min=math.radians(opts.get("theta_min_deg", 0.0)),
        theta_max=math.radians(opts.get("theta_max_deg", 3.0)),
        n_angles=opts.get("n_angles", 32),
        compensation=opts.get("compensation"),
    )
    far = _locate_peak(stack, peak.omega_c, spec.theta_max, rel_band=0.02)
    half = max(8 * peak.fwhm_omega, abs(far.omega_c - peak.omega_c) + 4 * far.fwhm_omega)
    grid = FrequencyGrid.uniform(pump.omega_p0 / 2, half, ctx.n_points)
    ctx.cache["angular"] = superpose_angular_range(stack, pump, spec, grid)
    return ctx.cache["angular"]


@preset(10, "Spectral amplitude superposed over a range of emission angles")
def figure_10(ctx):
    return [ctx.write("fig10.csv", _angular(ctx).to_csv())]


@preset(11, "Schmidt modes of the angular-range amplitude")
def figure_11(ctx):
    return _schmidt_export(ctx, _angular(ctx), "fig11")


def _two_peak(ctx, square=False):
    key = ("two-peak", square)
    if key in ctx.cache:
        return ctx.cache[key]
    stack, (first, second) = _search(ctx, "two-peak")
    base = ctx.config.pump(default_omega=first.omega_c + second.omega_c)
    pump = PumpConfig(
        first.omega_c + second.omega_c, base.duration_fwhm, base.amplitude, base.beam_diameter
    )
    if square:
        center = pump.omega_p0 / 2
        narrow = min(first.fwhm_omega, second.fwhm_omega)
        half = abs(first.omega_c - center) + 8 * max(first.fwhm_omega, second.fwhm_omega)
        # At least 4 samples over the narrowest peak
        n = int(min(2048, max(ctx.n_points, 2 * half / (narrow / 4))))
        grid = FrequencyGrid.uniform(center, half, n)
    else:
        grid = FrequencyGrid.uniform(
            first.omega_c, 8 * first.fwhm_omega, ctx.n_points,
            center_i=second.omega_c, half_width_i=8 * second.fwhm_omega,
        )
    ctx.cache[key] = two_photon_amplitude(stack, pump, grid=grid, normalization="paper")
    return ctx.cache[key]


@preset(12, "Photon fluxes of a two-peak structure")
def figure_12(ctx):
    temporal = temporal_amplitude(_two_peak(ctx))
    rows = []
    for name in ("signal", "idler"):
        flux = photon_flux(temporal, name)
        rows.extend([name, t, v] for t, v in zip(flux.t, flux.values))
    return [ctx.write("fig12.csv", _csv(["field", "t_fs", "flux"], rows))]


@preset(13, "Hong-Ou-Mandel interferogram of a two-peak structure")
def figure_13(ctx):
    tpa = _two_peak(ctx, square=True)
    _, (first, second) = _search(ctx, "two-peak")
    narrow = min(first.fwhm_omega, second.fwhm_omega)
    reach = 4 * math.pi / narrow
    period = 2 * math.pi / abs(first.omega_c - second.omega_c)
    # At least 8 samples per beat period
    count = int(min(4001, max(401, 16 * reach / period)))
    pattern = hom_rate(tpa, linspace(-reach, reach, count))
    return [ctx.write("fig13.csv", pattern.to_csv())]


def run_figure(number, ctx):
    try:
        fn = FIGURES[number]
    except KeyError:
        raise ValidationError(f"Unknown figure preset {number} (1 to {len(FIGURES)})")
    logger.info("Figure %s: %s", number, fn.title)
    return fn(ctx)
