"""Command-line pipeline: ingest, friends, distances, mobility, fit, synth, report."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from geofriends import distfit, friendship, ingest, mobility, plot, synth

log = logging.getLogger("geofriends")


class CliError(Exception):
    pass


def _require_file(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise CliError(f"input file not found: {path}")
    return p


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_records(args) -> list[ingest.MentionRecord]:
    result = ingest.read_mentions(_require_file(args.input))
    records = result.records
    if result.rejects:
        log.warning("%s: %d of %d lines rejected", args.input, result.n_rejected, result.n_lines)
    if args.region or args.region_file:
        if not (args.region and args.region_file):
            raise CliError("--region and --region-file must be given together")
        regions = ingest.load_regions(_require_file(args.region_file))
        if args.region not in regions:
            raise CliError(f"region {args.region!r} not in {args.region_file}")
        records = list(ingest.filter_region(records, regions[args.region]))
    return records


def _friend_config(args) -> friendship.FriendshipConfig:
    return friendship.FriendshipConfig(window_s=args.window_s, max_interval_s=args.max_interval_s)


def _read_distances(path: Path) -> list[float]:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    if first.startswith("user_a\t"):
        return [p.estimated_distance_km for p in friendship.read_pairs(path) if p.estimated_distance_km is not None]
    out = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                out.append(float(line))
            except ValueError:
                raise CliError(f"{path}:{n}: not a distance: {line!r}") from None
    return out


def _write_distances(values, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v in values:
            fh.write(f"{v!r}\n")


def _fit(distances, args, out: Path) -> distfit.DoublePowerLawFit:
    if not distances:
        raise CliError("no distances to fit")
    d_max = args.d_max if args.d_max is not None else max(1000.0, max(distances))
    binned = distfit.log_bin(distances, args.bins_per_decade, args.d_min, d_max)
    distfit.write_distribution(binned, out / "distribution.tsv")
    try:
        fit = distfit.fit_double_power_law(binned, args.min_bins_per_segment, args.improvement_threshold, args.min_count)
    except distfit.FitError as exc:
        raise CliError(str(exc)) from None
    distfit.write_fit(
        fit, out / "fit.json", bins_per_decade=args.bins_per_decade, d_min=args.d_min, d_max=d_max,
        min_bins_per_segment=args.min_bins_per_segment, min_count=args.min_count, n_distances=len(distances),
    )
    plot.write_svg(out / "fit.svg", binned, fit, distances)
    return fit


def _fit_summary(fit: distfit.DoublePowerLawFit) -> str:
    if fit.model_choice == "double":
        return f"double power law: gamma1={fit.gamma1:.3f} gamma2={fit.gamma2:.3f} d_s={fit.d_s:.4g} km"
    return f"single power law: gamma={fit.single_fallback.gamma:.3f}"


def cmd_ingest(args) -> str:
    src = _require_file(args.input)
    result = ingest.read_mentions(src)
    records = result.records
    out = _outdir(args)
    if args.region or args.region_file:
        records = _load_records(args)
    ingest.write_mentions(records, out / "mentions.tsv")
    ingest.write_rejects(result.rejects, out / "rejects.tsv")
    for line_no, reason in result.rejects:
        log.info("%s:%d: %s", src, line_no, reason)
    print(f"{src}: {result.n_lines} lines, {result.n_accepted} accepted, {result.n_rejected} rejected",
          file=sys.stderr)
    msg = f"ingest: {result.n_accepted} accepted, {result.n_rejected} rejected"
    if args.region:
        msg += f", {len(records)} in region {args.region}"
    return msg


def cmd_friends(args) -> str:
    records = _load_records(args)
    out = _outdir(args)
    exchanges = friendship.collect_exchanges(records, _friend_config(args))
    with open(out / "friends.tsv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("user_a\tuser_b\n")
        for a, b in sorted(exchanges):
            fh.write(f"{a}\t{b}\n")
    friendship.write_exchanges(exchanges, out / "exchanges.tsv")
    n_events = sum(len(v) for v in exchanges.values())
    return f"friends: {len(exchanges)} bidirectional pairs, {n_events} exchanges"


def _distances(args, records, out: Path) -> list[float]:
    pairs = friendship.build_friendship_distances(records, _friend_config(args))
    friendship.write_pairs(pairs, out / "pairs.tsv")
    values = [p.estimated_distance_km for p in pairs if p.estimated_distance_km is not None]
    _write_distances(values, out / "distances.txt")
    return values


def cmd_distances(args) -> str:
    records = _load_records(args)
    values = _distances(args, records, _outdir(args))
    return f"distances: {len(values)} pairs with an estimated distance"


def _mobility(args, records, out: Path):
    profiles = mobility.profile_users(ingest.build_location_history(records), args.max_gap_s)
    mobility.write_profiles(profiles, out / "mobility.tsv")
    return profiles, mobility.static_fraction(profiles)


def cmd_mobility(args) -> str:
    profiles, frac = _mobility(args, _load_records(args), _outdir(args))
    determined = sum(p.mode != "undetermined" for p in profiles)
    return f"mobility: {len(profiles)} users, {determined} classified, static fraction {frac:.3f}"


def cmd_fit(args) -> str:
    distances = _read_distances(_require_file(args.input))
    if not distances:
        raise CliError("no distances in input")
    fit = _fit(distances, args, _outdir(args))
    return "fit: " + _fit_summary(fit)


def cmd_synth(args) -> str:
    config = synth.SynthConfig(
        gamma1=args.gamma1, gamma2=args.gamma2, d_s=args.d_s, d_min=args.d_min, d_max=args.d_max,
        n_pairs=args.n_pairs, exchanges_per_pair=args.exchanges_per_pair,
        static_fraction_target=args.static_fraction, seed=args.seed, late_reply_fraction=args.late_reply_fraction,
    )
    out = _outdir(args)
    records = synth.generate_mention_stream(config, workers=args.workers)
    name = "mentions.jsonl" if args.format == "json" else "mentions.tsv"
    ingest.write_mentions(records, out / name, args.format)
    synth.write_truth(config, out / "truth.json")
    return f"synth: {config.n_pairs} pairs, {len(records)} mentions (seed {config.seed})"


def cmd_report(args) -> str:
    records = _load_records(args)
    out = _outdir(args)
    values = _distances(args, records, out)
    profiles, frac = _mobility(args, records, out)
    fit = _fit(values, args, out)
    summary = {
        "n_mentions": len(records),
        "n_pairs_with_distance": len(values),
        "fit": distfit.fit_record(fit),
        "mobility": {"n_users": len(profiles), "static_fraction": frac},
    }
    with open(out / "report.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return f"report: {len(values)} distances, {_fit_summary(fit)}, static fraction {frac:.3f}"


def _add_region(p):
    p.add_argument("--region-file", help="region boxes: 'name lat_min lat_max lon_min lon_max' per line")
    p.add_argument("--region", help="region name to keep (sender position, boundary inclusive)")


def _add_friend(p):
    p.add_argument("--window-s", type=float, default=None, help="friendship window (default: whole dataset)")
    p.add_argument("--max-interval-s", type=float, default=3600.0, help="qualifying reply interval, strict (default 3600)")


def _add_fit(p, with_range=True):
    p.add_argument("--bins-per-decade", type=int, default=distfit.DEFAULT_BINS_PER_DECADE)
    if with_range:
        p.add_argument("--d-min", type=float, default=0.1, help="first bin edge in km (default 0.1)")
        p.add_argument("--d-max", type=float, default=None, help="last bin edge in km (default max(1000, largest distance))")
    p.add_argument("--min-bins-per-segment", type=int, default=distfit.DEFAULT_MIN_BINS_PER_SEGMENT)
    p.add_argument("--min-count", type=int, default=distfit.DEFAULT_MIN_COUNT,
                   help="smallest bin count used in regressions (default 5)")
    p.add_argument("--improvement-threshold", type=float, default=distfit.DEFAULT_IMPROVEMENT_THRESHOLD)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geofriends", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse and validate a mention file")
    p.add_argument("input")
    _add_region(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("friends", help="detect bidirectional friend pairs and their exchanges")
    p.add_argument("input")
    _add_region(p)
    _add_friend(p)
    p.set_defaults(func=cmd_friends)

    p = sub.add_parser("distances", help="estimate per-pair distances")
    p.add_argument("input")
    _add_region(p)
    _add_friend(p)
    p.set_defaults(func=cmd_distances)

    p = sub.add_parser("mobility", help="classify users as static or moving")
    p.add_argument("input")
    _add_region(p)
    p.add_argument("--max-gap-s", type=float, default=3600.0)
    p.set_defaults(func=cmd_mobility)

    p = sub.add_parser("fit", help="log-bin distances and fit single/double power laws")
    p.add_argument("input", help="distances.txt (one km value per line) or pairs.tsv")
    _add_fit(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("synth", help="generate a mention stream from a planted double power law")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-pairs", type=int, default=1000)
    p.add_argument("--gamma1", type=float, default=0.60)
    p.add_argument("--gamma2", type=float, default=6.23)
    p.add_argument("--d-s", type=float, default=22.0)
    p.add_argument("--d-min", type=float, default=0.1)
    p.add_argument("--d-max", type=float, default=1000.0)
    p.add_argument("--exchanges-per-pair", type=int, default=1)
    p.add_argument("--static-fraction", type=float, default=1.0)
    p.add_argument("--late-reply-fraction", type=float, default=0.0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--format", choices=("tsv", "json"), default="tsv")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("report", help="distances, fit, plot and mobility summary in one directory")
    p.add_argument("input")
    _add_region(p)
    _add_friend(p)
    _add_fit(p)
    p.add_argument("--max-gap-s", type=float, default=3600.0)
    p.set_defaults(func=cmd_report)

    for p in sub.choices.values():
        p.add_argument("--out", default=".", help="output directory (default: current)")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        print(args.func(args))
    except (CliError, ValueError, OSError) as exc:
        print(f"geofriends {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
