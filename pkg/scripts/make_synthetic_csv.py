#!/usr/bin/env python3
"""Generate the synthetic two-channel activity CSV used by the demo runs."""
import argparse

from latenthypernet import synthetic


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out", help="output CSV path")
    parser.add_argument("--windows", type=int, default=600, help="total windows (default 600)")
    parser.add_argument("--window-len", type=int, default=64, help="samples per window (default 64)")
    parser.add_argument("--rate", type=float, default=32.0, help="nominal sampling rate in Hz")
    parser.add_argument("--noise", type=float, default=0.6, help="additive noise sigma")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    synthetic.write_synthetic_csv(
        args.out,
        n_windows=args.windows,
        window_len=args.window_len,
        seed=args.seed,
        noise=args.noise,
        sampling_rate_hz=args.rate,
    )
    seconds = args.window_len / args.rate
    print(f"wrote {args.out}; segment with --rate {args.rate} --window-seconds {seconds}")


if __name__ == "__main__":
    main()
