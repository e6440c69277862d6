#!/usr/bin/env python3
"""Generate the bundled synthetic whisper/trigger corpus.

Writes clean/*.wav + utterances.csv and noise/*.wav + noises.csv under
--out; these feed `whispermine build-corpus`.
"""

import argparse

from whispermine.synth import make_synth_corpus


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--scale", choices=("smoke", "full"), default="smoke")
    args = parser.parse_args()

    if args.scale == "full":
        kw = dict(n_speakers=12, utts_per_speaker=12, utt_duration_s=(2.5, 3.5),
                  noise_duration_s=120.0)
    else:
        kw = dict(n_speakers=6, utts_per_speaker=4, utt_duration_s=(1.2, 1.8),
                  noise_duration_s=30.0)
    utts, noises = make_synth_corpus(args.out, seed=args.seed, **kw)
    print(f"wrote {len(utts)} utterances and {len(noises)} noise recordings "
          f"under {args.out}")


if __name__ == "__main__":
    main()
