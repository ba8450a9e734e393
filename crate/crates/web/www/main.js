import init, { phantom_slice, cgo_decay, stability_curve } from "./pkg/scatterlab_browser.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function report(target, err) {
  target.innerHTML = "";
  const p = document.createElement("p");
  p.className = "error";
  p.textContent = String(err.message ?? err);
  target.appendChild(p);
}

function table(target, header, rows) {
  const t = document.createElement("table");
  const head = t.insertRow();
  for (const h of header) {
    const th = document.createElement("th");
    th.textContent = h;
    head.appendChild(th);
  }
  for (const r of rows) {
    const tr = t.insertRow();
    for (const v of r) tr.insertCell().textContent = v.toExponential(3);
  }
  target.innerHTML = "";
  target.appendChild(t);
}

function drawSlice() {
  const n = num("n");
  let values;
  try {
    values = phantom_slice(num("amp"), num("radius"), num("offset"), n);
  } catch (e) {
    report($("slice-info"), e);
    return;
  }
  let lo = Infinity, hi = -Infinity;
  for (const v of values) { lo = Math.min(lo, v); hi = Math.max(hi, v); }
  const span = hi - lo || 1;
  const canvas = $("slice");
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(n, n);
  for (let i = 0; i < n; i++) {
    for (let j = 0; j < n; j++) {
      const t = (values[i * n + j] - lo) / span;
      // x runs left to right, y bottom to top
      const px = ((n - 1 - j) * n + i) * 4;
      img.data[px] = 255 * t;
      img.data[px + 1] = 255 * t;
      img.data[px + 2] = 255 * (1 - t) * 0.6 + 255 * t;
      img.data[px + 3] = 255;
    }
  }
  const off = new OffscreenCanvas(n, n);
  off.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(off, 0, 0, canvas.width, canvas.height);
  $("slice-info").textContent = `Re n on z = 0 ranges over [${lo.toFixed(4)}, ${hi.toFixed(4)}]`;
}

function runDecay() {
  const out = $("decay-out");
  const rhos = $("rhos").value.split(",").map(Number).filter((x) => x > 0);
  try {
    const flat = cgo_decay(num("amp"), num("radius"), num("offset"), new Float64Array(rhos));
    const rows = rhos.map((rho, i) => [rho, flat[2 * i], flat[2 * i + 1], flat[2 * i] * flat[2 * i + 1]]);
    table(out, ["ρ", "|k|", "sup |μ − 1|", "|k| · sup |μ − 1|"], rows);
  } catch (e) {
    report(out, e);
  }
}

function runCurve() {
  const out = $("curve-out");
  try {
    const flat = stability_curve(num("m"), num("c"), num("dmin"), num("dmax"), 9);
    const rows = [];
    for (let i = 0; i < flat.length; i += 4) rows.push(Array.from(flat.slice(i, i + 4)));
    table(out, ["δ", "ρ", "κ", "bound"], rows);
  } catch (e) {
    report(out, e);
  }
}

await init();
$("draw").addEventListener("click", drawSlice);
$("decay").addEventListener("click", runDecay);
$("curve").addEventListener("click", runCurve);
drawSlice();
runCurve();
