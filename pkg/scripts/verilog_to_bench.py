"""Convert flat gate-primitive Verilog netlists to ISCAS .bench text.

Used once to vendor the ISCAS-85/89 corpus under benchmarks/ from the
structural Verilog copies shipped with the circuitgraph package. Handles
only what those files contain: ``input``/``output``/``wire`` declarations,
primitive instantiations (and, nand, or, nor, xor, xnor, not, buf),
``assign a = b;`` aliases (including constant drivers) and ``ff``/``fflopd`` flip-flop cells.
"""
import argparse
import re
import sys
from pathlib import Path

CONSTS = {"1'b0": "XOR", "1'b1": "XNOR"}
PRIMS = {"and", "nand", "or", "nor", "xor", "xnor", "not", "buf"}


def statements(text):
    text = re.sub(r"//.*", "", text)
    text = re.sub(r"/\*.*?\*/", "", text, flags=re.S)
    for stmt in text.split(";"):
        stmt = " ".join(stmt.split())
        if stmt:
            yield stmt


def convert(text):
    inputs, outputs, lines = [], [], []
    for stmt in statements(text):
        word = stmt.split()[0]
        if word == "module":
            continue
        if word in ("input", "output"):
            names = [n.strip() for n in stmt[len(word):].split(",")]
            (inputs if word == "input" else outputs).extend(names)
        elif word == "wire" or word == "endmodule":
            continue
        elif word == "assign":
            lhs, rhs = (s.strip() for s in stmt[len("assign"):].split("="))
            if rhs in CONSTS:
                # .bench has no constants; x XOR x is 0, x XNOR x is 1
                lines.append(f"{lhs} = {CONSTS[rhs]}({{x}}, {{x}})")
            else:
                lines.append(f"{lhs} = BUFF({rhs})")
        elif word in PRIMS:
            args = re.search(r"\((.*)\)", stmt).group(1)
            nets = [a.strip() for a in args.split(",")]
            kind = "BUFF" if word == "buf" else word.upper()
            lines.append(f"{nets[0]} = {kind}({', '.join(nets[1:])})")
        elif word in ("ff", "fflopd"):
            pins = dict(re.findall(r"\.(\w+)\s*\(\s*([\w\[\]]+)\s*\)", stmt))
            lines.append(f"{pins['Q']} = DFF({pins['D']})")
        elif word == "endmodule":
            continue
        else:
            raise ValueError(f"unsupported statement: {stmt[:60]}")
    # clock nets only drive flip-flops, which .bench leaves implicit
    inputs = [i for i in inputs if i not in ("clk", "CK")]
    out = [f"INPUT({i})" for i in inputs]
    out += [f"OUTPUT({o})" for o in outputs]
    x = next(i for i in inputs)
    out += [ln.replace("{x}", x) for ln in lines]
    return "\n".join(out) + "\n"


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("src", nargs="+", type=Path)
    ap.add_argument("--outdir", type=Path, default=Path("benchmarks"))
    args = ap.parse_args(argv)
    args.outdir.mkdir(parents=True, exist_ok=True)
    for src in args.src:
        dst = args.outdir / (src.stem + ".bench")
        body = convert(src.read_text())
        dst.write_text(f"# {src.stem}\n" + body)
        print(f"{src} -> {dst}", file=sys.stderr)


if __name__ == "__main__":
    main()
