// Decode Aztec symbols (JSON list of {rows}) with zxing-js; prints payload hex per symbol.
// Usage: NODE_PATH=<node_modules> node verify_aztec_zxing.js symbols.json
// ASCII payloads only: zxing-js decodes the result text as UTF-8.
const Z = require('@zxing/library');
const fs = require('fs');
const items = JSON.parse(fs.readFileSync(process.argv[2]));
const out = [];
for (const it of items) {
  const rows = it.rows, n = rows.length, s = 4, q = 4;
  const W = (n + 2*q) * s;
  const lum = new Uint8ClampedArray(W*W).fill(255);
  for (let y=0;y<n;y++) for (let x=0;x<n;x++) if (rows[y][x]==='1')
    for (let dy=0;dy<s;dy++) for (let dx=0;dx<s;dx++) lum[((y+q)*s+dy)*W + (x+q)*s+dx] = 0;
  const src = new Z.RGBLuminanceSource(lum, W, W);
  const bmp = new Z.BinaryBitmap(new Z.HybridBinarizer(src));
  try {
    const r = new Z.AztecCodeReader().decode(bmp);
    out.push(Buffer.from(r.getText(), 'latin1').toString('hex'));
  } catch (e) { out.push('ERR ' + e.constructor.name + ' ' + e.message); }
}
console.log(JSON.stringify(out));
