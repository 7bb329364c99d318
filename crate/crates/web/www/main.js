import init, { plan, push, gain_stability } from "./pkg/dcmwalk_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

// Maps world points into a canvas; `equal` keeps the aspect ratio.
function frame(canvas, xs, ys, equal = true, pad = 20) {
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  const [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  let sx = (canvas.width - 2 * pad) / (x1 - x0 || 1);
  let sy = (canvas.height - 2 * pad) / (y1 - y0 || 1);
  if (equal) sx = sy = Math.min(sx, sy);
  const ox = pad + ((canvas.width - 2 * pad) - sx * (x1 - x0)) / 2;
  const oy = pad + ((canvas.height - 2 * pad) - sy * (y1 - y0)) / 2;
  return (x, y) => [ox + sx * (x - x0), canvas.height - (oy + sy * (y - y0))];
}

function polyline(ctx, to, xy, color) {
  ctx.strokeStyle = color;
  ctx.beginPath();
  for (let i = 0; i < xy.length; i += 2) {
    const [px, py] = to(xy[i], xy[i + 1]);
    i === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
  }
  ctx.stroke();
}

function drawPlan() {
  const p = plan(num("plan-speed"), num("plan-turn"), num("plan-duration"));
  const canvas = $("plan-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const steps = p.footsteps();
  const [l, w] = [p.foot_length, p.foot_width];
  const xs = [], ys = [];
  for (let i = 0; i < steps.length; i += 4) {
    xs.push(steps[i] - l, steps[i] + l);
    ys.push(steps[i + 1] - l, steps[i + 1] + l);
  }
  const to = frame(canvas, xs, ys);
  ctx.fillStyle = "rgba(120,120,120,0.35)";
  for (let i = 0; i < steps.length; i += 4) {
    const [x, y, yaw] = [steps[i], steps[i + 1], steps[i + 2]];
    const c = [[1, 1], [1, -1], [-1, -1], [-1, 1]].map(([a, b]) => {
      const lx = (a * l) / 2, ly = (b * w) / 2;
      return to(x + Math.cos(yaw) * lx - Math.sin(yaw) * ly, y + Math.sin(yaw) * lx + Math.cos(yaw) * ly);
    });
    ctx.beginPath();
    c.forEach(([px, py], k) => (k === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py)));
    ctx.closePath();
    ctx.fill();
  }
  polyline(ctx, to, p.zmp(), "#d33");
  polyline(ctx, to, p.dcm(), "#36c");
  polyline(ctx, to, p.com(), "#2a2");
  $("plan-out").textContent = `${steps.length / 4} footsteps, ${p.times().length} samples`;
}

function drawPush() {
  const args = [num("push-x"), num("push-y"), num("push-t"), 0.15];
  const t0 = performance.now();
  const inst = push(false, ...args);
  const mpc = push(true, ...args);
  const ms = performance.now() - t0;
  const canvas = $("push-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  // x coordinate against time.
  const series = (xy) => Array.from({ length: xy.length / 2 }, (_, k) => [k * 0.01, xy[2 * k]]).flat();
  const all = [series(inst.zmp_cmd()), series(mpc.zmp_cmd()), series(inst.dcm_ref())];
  const xs = all.flatMap((s) => s.filter((_, i) => i % 2 === 0));
  const ys = all.flatMap((s) => s.filter((_, i) => i % 2 === 1));
  const to = frame(canvas, xs, ys, false);
  polyline(ctx, to, all[2], "#888");
  polyline(ctx, to, all[0], "#36c");
  polyline(ctx, to, all[1], "#c60");
  const line = (name, r) =>
    `${name.padEnd(14)} ticks outside polygon ${String(r.outside).padStart(4)}   worst margin ${(r.worst_margin * 1000).toFixed(1).padStart(6)} mm   ${r.fell ? `fell at ${r.fall_time.toFixed(2)} s` : "no fall"}`;
  $("push-out").textContent = `${line("instantaneous", inst)}\n${line("MPC", mpc)}\n(${ms.toFixed(0)} ms)`;
}

function drawGains() {
  const r = gain_stability(num("kp-x"), num("kp-y"), num("ki-x"), num("ki-y"));
  const ev = r.eigenvalues();
  const canvas = $("gain-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  const re = [], im = [];
  for (let i = 0; i < ev.length; i += 2) {
    re.push(ev[i]);
    im.push(ev[i + 1]);
  }
  const m = Math.max(1, ...re.map(Math.abs), ...im.map(Math.abs)) * 1.2;
  const to = frame(canvas, [-m, m], [-m, m]);
  ctx.strokeStyle = "#ccc";
  ctx.beginPath();
  ctx.moveTo(...to(-m, 0));
  ctx.lineTo(...to(m, 0));
  ctx.moveTo(...to(0, -m));
  ctx.lineTo(...to(0, m));
  ctx.stroke();
  re.forEach((x, k) => {
    const [px, py] = to(x, im[k]);
    ctx.fillStyle = x < 0 ? "#2a2" : "#d33";
    ctx.fillRect(px - 4, py - 4, 8, 8);
  });
  $("gain-out").textContent =
    `${r.accepted ? "accepted" : "rejected: " + r.message}\nmax real part ${r.max_real.toFixed(3)} 1/s (${r.max_real < 0 ? "stable" : "unstable"})`;
}

const guard = (f, out) => () => {
  try {
    f();
  } catch (e) {
    $(out).textContent = `error: ${e}`;
  }
};

await init();
$("plan-go").onclick = guard(drawPlan, "plan-out");
$("push-go").onclick = guard(drawPush, "push-out");
$("gain-go").onclick = guard(drawGains, "gain-out");
guard(drawPlan, "plan-out")();
guard(drawGains, "gain-out")();
