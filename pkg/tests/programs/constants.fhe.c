// Constant subexpressions that folding removes.
const u8 K = 3;

u8 main(u8 a, u4 b) {
    u8 t = a * 1 + 0;
    u8 u = (u8)b & 0;
    return (t ^ u) + (u8)(K * 4 - 12) + (a - a);
}
