import init, { tail_curve, simulate_pmf, wright_ratio } from "./pkg/critwin_wasm.js";

const num = (id) => Number(document.getElementById(id).value);

function plot(canvasId, series, { logY = false, bars = false } = {}) {
  const canvas = document.getElementById(canvasId);
  const ctx = canvas.getContext("2d");
  const pad = 40;
  const w = canvas.width - 2 * pad;
  const h = canvas.height - 2 * pad;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const points = series.flatMap((s) => s.points).filter(([, y]) => Number.isFinite(y) && (!logY || y > 0));
  if (points.length === 0) return;
  const ty = (y) => (logY ? Math.log10(y) : y);
  const xs = points.map(([x]) => x);
  const ys = points.map(([, y]) => ty(y));
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (!logY) y0 = Math.min(0, y0);
  if (y1 === y0) y1 = y0 + 1;
  const px = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * w;
  const py = (y) => pad + h - ((ty(y) - y0) / (y1 - y0)) * h;

  ctx.strokeStyle = "#888";
  ctx.strokeRect(pad, pad, w, h);
  ctx.fillStyle = "#333";
  ctx.font = "11px sans-serif";
  ctx.fillText(logY ? `1e${y1.toFixed(1)}` : y1.toPrecision(3), 2, pad + 4);
  ctx.fillText(logY ? `1e${y0.toFixed(1)}` : y0.toPrecision(3), 2, pad + h);
  ctx.fillText(String(+x0.toPrecision(4)), pad, pad + h + 14);
  ctx.fillText(String(+x1.toPrecision(4)), pad + w - 30, pad + h + 14);

  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.fillStyle = s.color;
    const pts = s.points.filter(([, y]) => Number.isFinite(y) && (!logY || y > 0));
    if (bars) {
      const bw = Math.max(1, w / pts.length - 1);
      for (const [x, y] of pts) ctx.fillRect(px(x) - bw / 2, py(y), bw, pad + h - py(y));
    } else {
      ctx.beginPath();
      pts.forEach(([x, y], i) => (i ? ctx.lineTo(px(x), py(y)) : ctx.moveTo(px(x), py(y))));
      ctx.stroke();
    }
  }
}

function guarded(msgId, f) {
  return () => {
    const msg = document.getElementById(msgId);
    msg.textContent = "";
    try {
      f();
    } catch (e) {
      msg.textContent = e.message ?? String(e);
    }
  };
}

function drawTails() {
  const v = tail_curve(num("tc-n"), num("tc-lambda"), num("tc-amin"), num("tc-amax"), 120);
  const l1 = [];
  const cv = [];
  for (let i = 0; i < v.length; i += 3) {
    l1.push([v[i], v[i + 1]]);
    cv.push([v[i], v[i + 2]]);
  }
  plot("tc-plot", [
    { points: l1, color: "#1f77b4" },
    { points: cv, color: "#ff7f0e" },
  ], { logY: true });
}

function drawPmf() {
  const largest = document.getElementById("sp-largest").checked;
  const f = simulate_pmf(num("sp-n"), num("sp-lambda"), largest, num("sp-r"), num("sp-seed"));
  let last = f.length;
  while (last > 1 && f[last - 1] === 0) last--;
  const points = Array.from(f.slice(0, last), (y, i) => [i + 1, y]);
  plot("sp-plot", [{ points, color: "#2ca02c" }], { bars: true });
}

function drawWright() {
  const r = wright_ratio(num("wr-k"), num("wr-l"));
  const points = Array.from(r, (y, i) => [i + 1, y]);
  const one = points.filter(([, y]) => Number.isFinite(y)).map(([x]) => [x, 1]);
  plot("wr-plot", [
    { points, color: "#9467bd" },
    { points: one, color: "#bbb" },
  ]);
}

await init();
const wire = (id, msg, f) => {
  const run = guarded(msg, f);
  document.getElementById(id).addEventListener("click", run);
  run();
};
wire("tc-go", "tc-msg", drawTails);
wire("sp-go", "sp-msg", drawPmf);
wire("wr-go", "wr-msg", drawWright);
