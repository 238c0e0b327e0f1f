import os
import subprocess
import argparse

# The C1/C2/C3 code family: (N, M, d_c, d_v)
SHAPES = {
    "C1": (16, 8, 4, 2),
    "C2": (32, 16, 4, 2),
    "C3": (64, 32, 4, 2),
}

QS = range(2, 9)
ALGORITHMS = ["fft-spa", "min-max"]

# FER/BER curves are built for GF(16) only; the other fields are covered by the
# complexity reports.
SIMULATE_Q = 4
EBN0_GRID = ["1.0", "2.0", "3.0", "4.0"]
SIMULATE_FRAMES = "1000"

CODES_DIR = "codes"
REPORTS_DIR = "reports"
SEED = "0"


def run_command(cmd):
    print(f"Running: {' '.join(cmd)}")
    subprocess.check_call(cmd)


def ensure_dirs():
    os.makedirs(CODES_DIR, exist_ok=True)
    os.makedirs(REPORTS_DIR, exist_ok=True)


def code_path(shape, q):
    return os.path.join(CODES_DIR, f"{shape}_gf{1 << q}.alist")


def main():
    parser = argparse.ArgumentParser(description="Build the C1/C2/C3 code family and reports.")
    parser.add_argument("-s", "--shape", help="Build a single shape (e.g. C1)")
    parser.add_argument("--force", action="store_true", help="Force rebuild even if files exist")
    parser.add_argument("--skip-simulate", action="store_true", help="Only codes and complexity reports")
    args = parser.parse_args()

    ensure_dirs()

    # Auto-detect venv python
    venv_python = os.path.join(os.getcwd(), ".venv", "bin", "python3")
    if os.path.exists(venv_python):
        python_cmd = venv_python
    else:
        python_cmd = "python3"

    target_shapes = sorted(SHAPES)
    if args.shape:
        if args.shape not in SHAPES:
            print(f"Error: Shape {args.shape} not in supported list.")
            print("Supported shapes:", ", ".join(sorted(SHAPES)))
            return
        target_shapes = [args.shape]

    # 1. Generate the codes, one per shape and field
    for shape in target_shapes:
        n, m, dc, dv = SHAPES[shape]
        for q in QS:
            out = code_path(shape, q)
            if os.path.exists(out) and not args.force:
                print(f"Code {out} already exists.")
                continue
            run_command([
                python_cmd, "bin/nbldpc.py", "gen",
                "--n", str(n), "--m", str(m), "--dc", str(dc), "--dv", str(dv),
                "--q", str(q), "--seed", SEED,
                "-o", out,
            ])

    # 2. Complexity reports: model vs counted operations over every field
    for shape in target_shapes:
        out = os.path.join(REPORTS_DIR, f"analyze_{shape}.csv")
        if os.path.exists(out) and not args.force:
            print(f"Report {out} already exists.")
            continue
        print(f"Counting operations for {shape}...")
        run_command([python_cmd, "bin/nbldpc.py", "analyze", "--shape", shape, "--seed", SEED,
                     "-o", out])

    if args.skip_simulate:
        print("\nBuild Complete!")
        return

    # 3. FER/BER curves, both decoders, fixed iteration count
    for shape in target_shapes:
        for algorithm in ALGORITHMS:
            out = os.path.join(REPORTS_DIR, f"simulate_{shape}_gf{1 << SIMULATE_Q}_{algorithm}.csv")
            if os.path.exists(out) and not args.force:
                print(f"Report {out} already exists.")
                continue
            print(f"Simulating {algorithm} on {shape}...")
            run_command([
                python_cmd, "bin/nbldpc.py", "simulate",
                "--code", code_path(shape, SIMULATE_Q),
                "--algorithm", algorithm,
                "--no-early-stop",
                "--ebn0", *EBN0_GRID,
                "--frames", SIMULATE_FRAMES,
                "--seed", SEED,
                "--progress",
                "-o", out,
            ])

    print("\nBuild Complete!")


if __name__ == "__main__":
    main()
