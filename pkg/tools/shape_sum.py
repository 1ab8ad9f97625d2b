#!/usr/bin/env python3
"""Count classifier parameters from layer shapes alone.

Deliberately independent of the feedbackml package: every count is a plain
product of the shapes each layer owns, so it can cross-check
``feedbackml.models.param_count``.

    python tools/shape_sum.py            # reference configurations
    python tools/shape_sum.py --json
"""
import argparse
import json


def dense(n_in, n_out):
    return n_in * n_out + n_out


def conv1d(channels_in, kernel, filters):
    return filters * kernel * channels_in + filters


def lstm(n_in, hidden):
    # four gates, each with input weights, recurrent weights and one bias
    return 4 * (n_in * hidden + hidden * hidden + hidden)


def cnn(num_classes, dim=300, filters=(300, 300), kernels=(5, 4), dense_units=300):
    return (conv1d(dim, kernels[0], filters[0])
            + conv1d(filters[0], kernels[1], filters[1])
            + dense(filters[1], dense_units)
            + dense(dense_units, num_classes))


def bilstm(num_classes, dim=300, units=(300, 150), dense_units=150, second_bidirectional=True):
    first = 2 * lstm(dim, units[0])
    second = (2 if second_bidirectional else 1) * lstm(2 * units[0], units[1])
    width = (2 if second_bidirectional else 1) * units[1]
    return first + second + dense(width, dense_units) + dense(dense_units, num_classes)


REFERENCE = {
    "cnn_c12": cnn(12),
    "bilstm_c2": bilstm(2),
    "bilstm_c2_reverse_second_layer": bilstm(2, second_bidirectional=False),
}


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--json", action="store_true", help="print counts as JSON")
    args = parser.parse_args()
    if args.json:
        print(json.dumps(REFERENCE, indent=2))
    else:
        for name, count in REFERENCE.items():
            print(f"{name:32s} {count:>12,d}")


if __name__ == "__main__":
    main()
