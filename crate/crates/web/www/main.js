// Expects the wasm-bindgen output (`--target web`) in ./pkg.
import init, { rc_taps, rc_response_db, bin_freqs, presets, GanSession } from "./pkg/psgan_web.js";

const $ = (id) => document.getElementById(id);

// series: [{ x, y, color }]
function plot(canvas, series, { ylo, yhi, title } = {}) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const xs = series.flatMap((s) => s.x);
  const ys = series.flatMap((s) => s.y).filter(Number.isFinite);
  if (!xs.length) return;
  const x0 = Math.min(...xs), x1 = Math.max(...xs);
  const y0 = ylo ?? Math.min(...ys), y1 = yhi ?? Math.max(...ys);
  const px = (x) => 30 + ((x - x0) / (x1 - x0 || 1)) * (w - 40);
  const py = (y) => h - 20 - ((Math.min(Math.max(y, y0), y1) - y0) / (y1 - y0 || 1)) * (h - 40);
  ctx.fillStyle = "#555";
  ctx.fillText(title ?? "", 34, 12);
  ctx.fillText(y1.toPrecision(3), 0, 24);
  ctx.fillText(y0.toPrecision(3), 0, h - 20);
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    s.x.forEach((x, i) => (i ? ctx.lineTo(px(x), py(s.y[i])) : ctx.moveTo(px(x), py(s.y[i]))));
    ctx.stroke();
  }
}

// natural FFT order to ascending frequency
function shifted(freqs, vals) {
  const idx = [...freqs.keys()].sort((a, b) => freqs[a] - freqs[b]);
  return { x: idx.map((i) => freqs[i]), y: idx.map((i) => vals[i]) };
}

function drawRc() {
  const len = Number($("rc-len").value);
  const beta = Number($("rc-beta").value);
  $("rc-beta-val").textContent = beta.toFixed(2);
  try {
    const taps = Array.from(rc_taps(len, beta));
    plot($("rc-taps"), [{ x: taps.map((_, i) => i), y: taps, color: "#1565c0" }], { ylo: 0, title: "taps" });
    const resp = Array.from(rc_response_db(len, beta, 512));
    plot($("rc-resp"), [{ x: resp.map((_, i) => (0.5 * i) / resp.length), y: resp, color: "#1565c0" }],
      { ylo: -80, yhi: 0, title: "|H| dB vs cycles/sample" });
  } catch (e) {
    $("rc-beta-val").textContent = String(e);
  }
}

let session = null;
let running = false;

function reset() {
  running = false;
  session?.free();
  session = new GanSession($("preset").value, BigInt($("seed").value));
  drawSession();
}

function drawSession() {
  const acc = Array.from(session.accuracy_history());
  plot($("acc"), [
    { x: acc.map((_, i) => i), y: acc, color: "#c62828" },
    { x: [0, Math.max(acc.length - 1, 1)], y: [0.5, 0.5], color: "#aaa" },
  ], { ylo: 0, yhi: 1, title: "discriminator accuracy" });
  const f = Array.from(bin_freqs(256));
  const p = shifted(f, Array.from(session.prototype_spectrum_db()));
  const g = shifted(f, Array.from(session.generated_spectrum_db()));
  plot($("spec"), [{ ...p, color: "#333" }, { ...g, color: "#c62828" }], { title: "mean power dB: prototype (black), generated (red)" });
  const c = Array.from(session.pdf_centers());
  plot($("pdf"), [
    { x: c, y: Array.from(session.prototype_pdf()), color: "#333" },
    { x: c, y: Array.from(session.generated_pdf()), color: "#c62828" },
  ], { ylo: 0, title: "sample PDF" });
  const last = acc.length ? acc[acc.length - 1].toFixed(3) : "n/a";
  $("status").textContent = `epoch ${session.epoch()}  accuracy ${last}  KS ${session.ks().toFixed(3)}`;
}

function step(n) {
  session.step(n);
  drawSession();
}

function loop() {
  if (!running) return;
  step(2);
  requestAnimationFrame(loop);
}

await init();
for (const name of presets()) $("preset").add(new Option(name, name));
$("rc-len").addEventListener("input", drawRc);
$("rc-beta").addEventListener("input", drawRc);
$("reset").addEventListener("click", reset);
$("step").addEventListener("click", () => step(10));
$("run").addEventListener("click", () => { running = !running; loop(); });
drawRc();
reset();
