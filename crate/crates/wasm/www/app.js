import init, { cascadeSpectrum, surrogateWidths, fseCurve } from "./pkg/mfcomp_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function extent(values) {
  let lo = Infinity, hi = -Infinity;
  for (const v of values) if (Number.isFinite(v)) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  if (lo === hi) { lo -= 0.5; hi += 0.5; }
  const pad = 0.05 * (hi - lo);
  return [lo - pad, hi + pad];
}

// series: [{x, y, color, points?, err?}]
function plot(canvas, series, { xlabel = "", ylabel = "", logx = false, logy = false } = {}) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, m = { l: 55, r: 10, t: 10, b: 40 };
  const tx = (v) => (logx ? Math.log10(v) : v);
  const ty = (v) => (logy ? Math.log10(v) : v);
  const xs = series.flatMap((s) => s.x.map(tx));
  const ys = series.flatMap((s) => s.y.flatMap((v, i) => (s.err ? [v - s.err[i], v + s.err[i]] : [v])).filter((v) => !logy || v > 0).map(ty));
  const [x0, x1] = extent(xs), [y0, y1] = extent(ys);
  const px = (v) => m.l + ((tx(v) - x0) / (x1 - x0)) * (W - m.l - m.r);
  const py = (v) => H - m.b - ((ty(v) - y0) / (y1 - y0)) * (H - m.t - m.b);
  ctx.clearRect(0, 0, W, H);
  ctx.strokeStyle = "#888";
  ctx.strokeRect(m.l, m.t, W - m.l - m.r, H - m.t - m.b);
  ctx.fillStyle = "#444";
  ctx.font = "11px sans-serif";
  for (let i = 0; i <= 4; i++) {
    const xv = x0 + ((x1 - x0) * i) / 4, yv = y0 + ((y1 - y0) * i) / 4;
    const xt = logx ? `1e${xv.toFixed(1)}` : xv.toPrecision(3);
    const yt = logy ? `1e${yv.toFixed(1)}` : yv.toPrecision(3);
    ctx.fillText(xt, m.l + ((W - m.l - m.r) * i) / 4 - 12, H - m.b + 14);
    ctx.fillText(yt, 4, H - m.b - ((H - m.t - m.b) * i) / 4 + 4);
  }
  ctx.fillText(xlabel, W / 2 - 20, H - 6);
  ctx.save();
  ctx.translate(12, H / 2 + 20);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(ylabel, 0, 0);
  ctx.restore();
  for (const s of series) {
    ctx.strokeStyle = ctx.fillStyle = s.color;
    if (s.points) {
      s.x.forEach((x, i) => {
        if (logy && s.y[i] <= 0) return;
        ctx.beginPath();
        ctx.arc(px(x), py(s.y[i]), 2.5, 0, 2 * Math.PI);
        ctx.fill();
        if (s.err) {
          const lo = Math.max(s.y[i] - s.err[i], logy ? s.y[i] * 0.01 : -Infinity);
          ctx.beginPath();
          ctx.moveTo(px(x), py(lo));
          ctx.lineTo(px(x), py(s.y[i] + s.err[i]));
          ctx.stroke();
        }
      });
    } else {
      ctx.beginPath();
      s.x.forEach((x, i) => (i ? ctx.lineTo(px(x), py(s.y[i])) : ctx.moveTo(px(x), py(s.y[i]))));
      ctx.stroke();
    }
  }
}

function guarded(button, out, job) {
  $(button).addEventListener("click", () => {
    $(out).textContent = "running...";
    setTimeout(() => {
      try {
        job();
      } catch (e) {
        $(out).textContent = `error: ${e.message ?? e}`;
      }
    }, 20);
  });
}

guarded("c-run", "c-out", () => {
  const d = JSON.parse(cascadeSpectrum(num("c-p"), num("c-depth"), BigInt(num("c-seed"))));
  plot($("c-tau"), [
    { x: d.q, y: d.tau_analytic, color: "#36c" },
    { x: d.q, y: d.tau, color: "#c33", points: true },
  ], { xlabel: "q", ylabel: "tau(q)" });
  plot($("c-f"), [
    { x: d.alpha_analytic, y: d.f_analytic, color: "#36c" },
    { x: d.alpha, y: d.f, color: "#c33", points: true },
  ], { xlabel: "alpha", ylabel: "f(alpha)" });
  $("c-out").textContent = `delta alpha measured ${d.delta_alpha.toFixed(4)}, analytic ${d.delta_alpha_analytic.toFixed(4)}`;
});

guarded("s-run", "s-out", () => {
  const d = JSON.parse(surrogateWidths(num("s-h"), num("s-g"), num("s-n"), num("s-e"), BigInt(num("s-seed"))));
  const shown = d.series.slice(0, 2000);
  plot($("s-series"), [{ x: shown.map((_, i) => i), y: shown, color: "#222" }], { xlabel: "t", ylabel: "v(t)" });
  const k = d.linear_memory.widths.map((_, i) => i + 1);
  plot($("s-widths"), [
    { x: [0, k.length + 1], y: [d.delta_alpha, d.delta_alpha], color: "#222" },
    { x: k, y: d.linear_memory.widths, color: "#c33", points: true },
    { x: k, y: d.shuffled.widths, color: "#393", points: true },
  ], { xlabel: "member", ylabel: "delta alpha" });
  const fmt = (e) => `${e.mean.toFixed(4)} ± ${e.std.toFixed(4)}`;
  $("s-out").textContent =
    `delta alpha ${d.delta_alpha.toFixed(4)}\nlinear memory ${fmt(d.linear_memory.estimate)}\nshuffled ${fmt(d.shuffled.estimate)}\n` +
    `effective width ${(d.delta_alpha - d.linear_memory.estimate.mean).toFixed(4)}`;
});

guarded("f-run", "f-out", () => {
  const d = JSON.parse(fseCurve(num("f-h"), num("f-l"), num("f-e"), BigInt(num("f-seed"))));
  plot($("f-plot"), [
    { x: d.lengths, y: d.closed_form, color: "#36c" },
    { x: d.lengths, y: d.measured.map((e) => e.mean), err: d.measured.map((e) => e.std), color: "#c33", points: true },
  ], { xlabel: "L", ylabel: "delta alpha", logx: true, logy: true });
  $("f-out").textContent = d.lengths
    .map((l, i) => `L=${l}  measured ${d.measured[i].mean.toFixed(4)}  closed form ${d.closed_form[i].toFixed(4)}`)
    .join("\n");
});

init().then(() => {
  $("status").textContent = "Ready.";
  for (const id of ["c-run", "s-run", "f-run"]) $(id).disabled = false;
}).catch((e) => {
  $("status").textContent = `Could not load the module: ${e}. Build it first (see README).`;
});
