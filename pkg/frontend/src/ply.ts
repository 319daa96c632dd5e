/** Tiny ASCII PLY reader/writer for the browser side: enough to preview a
 * cloud locally and to synthesize test clouds. The service remains the
 * authority on parsing; this is display plumbing only. */

export interface ParsedCloud {
  points: Float64Array; // xyz triples
  count: number;
}

export function parsePly(text: string): ParsedCloud {
  const lines = text.split(/\r?\n/);
  if (lines[0]?.trim() !== "ply") throw new Error("not a PLY file");
  let vertexCount = -1;
  let bodyStart = -1;
  const properties: string[] = [];
  let inVertex = false;
  for (let i = 1; i < lines.length; i++) {
    const tokens = lines[i].trim().split(/\s+/);
    if (tokens[0] === "element") {
      inVertex = tokens[1] === "vertex";
      if (inVertex) vertexCount = parseInt(tokens[2], 10);
    } else if (tokens[0] === "property" && inVertex) {
      properties.push(tokens[tokens.length - 1]);
    } else if (tokens[0] === "end_header") {
      bodyStart = i + 1;
      break;
    }
  }
  if (vertexCount < 0 || bodyStart < 0) throw new Error("malformed PLY header");
  const ix = properties.indexOf("x");
  const iy = properties.indexOf("y");
  const iz = properties.indexOf("z");
  if (ix < 0 || iy < 0 || iz < 0) throw new Error("PLY lacks x/y/z");
  const points = new Float64Array(vertexCount * 3);
  let row = 0;
  for (let i = bodyStart; i < lines.length && row < vertexCount; i++) {
    const line = lines[i].trim();
    if (!line) continue;
    const tokens = line.split(/\s+/);
    points[row * 3] = parseFloat(tokens[ix]);
    points[row * 3 + 1] = parseFloat(tokens[iy]);
    points[row * 3 + 2] = parseFloat(tokens[iz]);
    row++;
  }
  if (row !== vertexCount) throw new Error("PLY body shorter than declared");
  return { points, count: vertexCount };
}

export function writePly(points: ArrayLike<number>): string {
  const count = Math.floor(points.length / 3);
  const out: string[] = [
    "ply",
    "format ascii 1.0",
    `element vertex ${count}`,
    "property float x",
    "property float y",
    "property float z",
    "end_header",
  ];
  for (let i = 0; i < count; i++) {
    out.push(
      `${points[i * 3].toFixed(6)} ${points[i * 3 + 1].toFixed(6)} ` +
        `${points[i * 3 + 2].toFixed(6)}`,
    );
  }
  return out.join("\n") + "\n";
}
